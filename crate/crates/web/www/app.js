import init, { preset, analyze, simulate, szasz } from "./pkg/browser_demo.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];

function call(fn, ...args) {
  const out = JSON.parse(fn(...args));
  if (out.error) throw new Error(out.error);
  return out;
}

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
}

function polyline(ctx, xs, ys, sx, sy, color) {
  ctx.strokeStyle = color;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(ys[i])) : ctx.moveTo(sx(x), sy(ys[i]))));
  ctx.stroke();
}

function loadPreset() {
  $("scenario").value = JSON.stringify(call(preset, $("preset").value), null, 2);
}

function runAnalyze() {
  const el = $("verdict");
  try {
    const v = call(analyze, $("scenario").value);
    el.textContent = `${v.decision} (${v.method})`;
    el.className = `verdict ${v.decision}`;
    const shown = { ...v };
    if (shown.density) shown.density = `[${shown.density.length} values]`;
    if (shown.report && shown.report.certificate) {
      shown.report = { ...shown.report, certificate: { ...shown.report.certificate, phi: `[${shown.report.certificate.phi.length} values]` } };
    }
    if (shown.report) shown.report = { ...shown.report, coefficients: `[${shown.report.coefficients.length} vectors]` };
    $("verdict-json").textContent = JSON.stringify(shown, null, 2);
  } catch (e) {
    el.textContent = "error";
    el.className = "verdict";
    $("verdict-json").textContent = e.message;
  }
}

let run = null;

function drawFrame() {
  if (!run) return;
  const k = Number($("frame").value);
  const canvas = $("sim");
  const ctx = canvas.getContext("2d");
  const pad = 30;
  axes(ctx, canvas.width, canvas.height, pad);
  const lo = Math.min(0, run.min);
  const hi = run.max > lo ? run.max : lo + 1;
  const xs = Array.from({ length: run.points }, (_, p) => p / (run.points - 1));
  const sx = (x) => pad + x * (canvas.width - 2 * pad);
  const sy = (y) => canvas.height - pad - ((y - lo) / (hi - lo)) * (canvas.height - 2 * pad);
  const frame = run.frames[k];
  for (let j = 0; j < run.edges; j++) {
    const ys = frame.slice(j * run.points, (j + 1) * run.points);
    polyline(ctx, xs, ys, sx, sy, COLORS[j % COLORS.length]);
    ctx.fillStyle = COLORS[j % COLORS.length];
    ctx.fillText(`edge ${j + 1}`, canvas.width - pad - 50, pad + 12 * j);
  }
  $("time").textContent = `t = ${run.times[k].toFixed(3)}`;
}

function runSimulate() {
  try {
    run = call(simulate, $("scenario").value, Number($("amp").value), Number($("pulse").value), Number($("tfinal").value));
    $("frame").max = run.frames.length - 1;
    $("frame").value = 0;
    $("sim-info").textContent =
      `${run.frames.length} frames, min ${run.min.toExponential(3)}, max ${run.max.toExponential(3)}` +
      (run.tail !== null ? `, truncation tail ${run.tail.toExponential(2)}` : "");
    drawFrame();
  } catch (e) {
    run = null;
    $("sim-info").textContent = e.message;
  }
}

function runSzasz() {
  try {
    const out = call(szasz, $("orders").value, Number($("v").value), 201);
    const canvas = $("mirakjan");
    const ctx = canvas.getContext("2d");
    const pad = 30;
    axes(ctx, canvas.width, canvas.height, pad);
    const sx = (x) => pad + x * (canvas.width - 2 * pad);
    const sy = (y) => canvas.height - pad - y * (canvas.height - 2 * pad);
    polyline(ctx, out.x, out.x, sx, sy, "#000");
    out.curves.forEach((c, i) => polyline(ctx, out.x, c.values, sx, sy, COLORS[i % COLORS.length]));
    $("szasz-info").textContent = out.errors.map((e) => `n = ${e.n}: sup error ${e.sup_error.toExponential(4)}`).join("\n");
  } catch (e) {
    $("szasz-info").textContent = e.message;
  }
}

await init();
$("preset").addEventListener("change", loadPreset);
$("analyze").addEventListener("click", runAnalyze);
$("simulate").addEventListener("click", runSimulate);
$("frame").addEventListener("input", drawFrame);
$("szasz").addEventListener("click", runSzasz);
loadPreset();
runSzasz();
