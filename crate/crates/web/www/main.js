import init, { irisLines, irisLineCost, syntheticSpectrum, compareEmbeddings } from "./pkg/slce_web.js";

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"];
const LINE_COLORS = { slce: "#d62728", pca: "#1f77b4", lda: "#2ca02c" };
const $ = (id) => document.getElementById(id);

// Maps data coordinates into a canvas with a margin, equal scale on both axes.
function frame(canvas, xs, ys, equal = true, pad = 28) {
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const w = canvas.width - 2 * pad, h = canvas.height - 2 * pad;
  let sx = w / (x1 - x0 || 1), sy = h / (y1 - y0 || 1);
  if (equal) sx = sy = Math.min(sx, sy);
  const cx = (x0 + x1) / 2, cy = (y0 + y1) / 2;
  return {
    x: (v) => canvas.width / 2 + (v - cx) * sx,
    y: (v) => canvas.height / 2 - (v - cy) * sy,
  };
}

function clear(canvas) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.font = "12px system-ui, sans-serif";
  return ctx;
}

function dot(ctx, x, y, color, hollow = false, r = 3.5) {
  ctx.beginPath();
  ctx.arc(x, y, r, 0, 2 * Math.PI);
  if (hollow) {
    ctx.strokeStyle = color;
    ctx.lineWidth = 1.3;
    ctx.stroke();
  } else {
    ctx.fillStyle = color;
    ctx.globalAlpha = 0.8;
    ctx.fill();
    ctx.globalAlpha = 1;
  }
}

// ---- 1. lines through Iris ----

let lines = null;

function drawLines(theta) {
  const canvas = $("line-plot");
  const ctx = clear(canvas);
  const xs = lines.points.map((p) => p[0]), ys = lines.points.map((p) => p[1]);
  const f = frame(canvas, xs, ys);
  const reach = 3 * Math.max(...xs.map(Math.abs), ...ys.map(Math.abs));
  const drawLine = (angle, color, width, dash = []) => {
    ctx.beginPath();
    ctx.setLineDash(dash);
    ctx.strokeStyle = color;
    ctx.lineWidth = width;
    ctx.moveTo(f.x(-reach * Math.cos(angle)), f.y(-reach * Math.sin(angle)));
    ctx.lineTo(f.x(reach * Math.cos(angle)), f.y(reach * Math.sin(angle)));
    ctx.stroke();
    ctx.setLineDash([]);
  };
  for (const l of lines.lines) drawLine(l.angle, LINE_COLORS[l.method], 1.5, [5, 4]);
  drawLine(theta, "#555", 2.5);
  for (const [x, y, c] of lines.points) dot(ctx, f.x(x), f.y(y), PALETTE[c]);
  ctx.fillStyle = "#333";
  lines.class_names.forEach((n, i) => {
    ctx.fillStyle = PALETTE[i];
    ctx.fillText(n, 12, 18 + 15 * i);
  });

  // Loss against angle.
  const cc = $("line-curve");
  const cx = clear(cc);
  const n = lines.curve.length;
  const g = frame(cc, [0, 180], [Math.min(...lines.curve), Math.max(...lines.curve)], false, 36);
  cx.strokeStyle = "#888";
  cx.beginPath();
  lines.curve.forEach((v, i) => (i ? cx.lineTo : cx.moveTo).call(cx, g.x((180 * i) / n), g.y(v)));
  cx.stroke();
  for (const l of lines.lines) dot(cx, g.x((l.angle * 180) / Math.PI), g.y(l.cost), LINE_COLORS[l.method], false, 5);
  const mine = irisLineCost(theta);
  dot(cx, g.x((theta * 180) / Math.PI), g.y(mine), "#555", true, 6);
  cx.fillStyle = "#333";
  cx.fillText("loss vs. line angle (degrees)", 40, 20);

  const best = lines.lines.find((l) => l.method === "slce");
  const rows = lines.lines.map((l) => `${l.method.padEnd(5)} ${((l.angle * 180) / Math.PI).toFixed(2).padStart(7)} deg  loss ${l.cost.toFixed(4)}`);
  rows.push(`yours ${((theta * 180) / Math.PI).toFixed(2).padStart(7)} deg  loss ${mine.toFixed(4)}  (+${(mine - best.cost).toFixed(4)} over slce)`);
  $("line-readout").textContent = rows.join("\n");
}

function setupLines() {
  lines = JSON.parse(irisLines());
  const update = () => {
    const deg = Number($("angle").value);
    $("angle-val").textContent = `${deg.toFixed(1)} deg`;
    drawLines((deg * Math.PI) / 180);
  };
  $("angle").addEventListener("input", update);
  $("snap").addEventListener("click", () => {
    const best = lines.lines.find((l) => l.method === "slce");
    $("angle").value = ((best.angle * 180) / Math.PI).toFixed(1);
    update();
  });
  update();
}

// ---- 2. spectra ----

function drawSpectrum() {
  const m = Number($("sp-classes").value), sep = Number($("sp-sep").value), seed = Number($("sp-seed").value) | 0;
  $("sp-classes-val").textContent = m;
  $("sp-sep-val").textContent = sep.toFixed(2);
  const s = JSON.parse(syntheticSpectrum(m, sep, seed));
  const canvas = $("spectrum");
  const ctx = clear(canvas);
  const vals = s.rows.flatMap((r) => [r[0], r[1]]);
  const lo = Math.min(0, ...vals), hi = Math.max(0, ...vals);
  const pad = 36, w = (canvas.width - 2 * pad) / s.rows.length;
  const y = (v) => pad + ((hi - v) / (hi - lo || 1)) * (canvas.height - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, y(0));
  ctx.lineTo(canvas.width - pad, y(0));
  ctx.stroke();
  s.rows.forEach(([cross, sys], i) => {
    const x = pad + i * w;
    ctx.fillStyle = sys > 0 ? "#d62728" : "#1f77b4";
    ctx.fillRect(x + w * 0.2, Math.min(y(0), y(sys)), w * 0.6, Math.abs(y(sys) - y(0)));
    ctx.strokeStyle = "#222";
    ctx.strokeRect(x + w * 0.1, Math.min(y(0), y(cross)), w * 0.8, Math.abs(y(cross) - y(0)));
    ctx.fillStyle = "#333";
    ctx.fillText(String(i + 1), x + w * 0.4, canvas.height - 12);
  });
  $("spectrum-readout").textContent =
    `${s.n_classes} classes: ${s.positive_count} positive system eigenvalues (at most ${s.n_classes - 1})\n` +
    `one-direction losses: ${s.rows.slice(0, 8).map((r) => r[2].toFixed(1)).join(", ")} ...`;
}

// ---- 3. embeddings ----

function drawEmbedding(canvas, e) {
  const ctx = clear(canvas);
  const f = frame(canvas, e.points.map((p) => p[0]), e.points.map((p) => p[1]));
  for (const [x, y, c, test] of e.points) dot(ctx, f.x(x), f.y(y), PALETTE[c % PALETTE.length], test);
  ctx.fillStyle = "#333";
  ctx.fillText(`${e.method}: held-out separation ${e.test_separation.toFixed(3)}`, 10, 18);
}

function drawEmbeddings() {
  const m = Number($("em-classes").value), sep = Number($("em-sep").value), seed = Number($("em-seed").value) | 0;
  const noise = Number($("em-noise").value);
  $("em-classes-val").textContent = m;
  $("em-sep-val").textContent = sep.toFixed(2);
  $("em-noise-val").textContent = noise.toFixed(1);
  const [slce, pca] = JSON.parse(compareEmbeddings(m, sep, noise, seed));
  drawEmbedding($("emb-slce"), slce);
  drawEmbedding($("emb-pca"), pca);
  $("embed-readout").textContent =
    "separation = smallest gap between held-out class centroids / mean spread around them\n" +
    `slce ${slce.test_separation.toFixed(3)}   pca ${pca.test_separation.toFixed(3)}`;
}

function guard(fn) {
  return () => {
    try {
      fn();
      $("status").textContent = "";
    } catch (e) {
      $("status").textContent = `error: ${e.message ?? e}`;
    }
  };
}

await init();
$("status").textContent = "";
guard(setupLines)();
for (const id of ["sp-classes", "sp-sep", "sp-seed"]) $(id).addEventListener("input", guard(drawSpectrum));
for (const id of ["em-classes", "em-sep", "em-noise", "em-seed"]) $(id).addEventListener("input", guard(drawEmbeddings));
guard(drawSpectrum)();
guard(drawEmbeddings)();
