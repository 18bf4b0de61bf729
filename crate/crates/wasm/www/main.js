import init, { compareOffset, renderLabels, PeakDemo } from "./pkg/trigrasp_wasm.js";

const APEX = "#e62828";
const BASE = "#285ae6";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function bindOutputs(containerId, redraw) {
  for (const input of $(containerId).querySelectorAll("input")) {
    const out = input.nextElementSibling;
    const sync = () => { out.value = input.value; };
    sync();
    input.addEventListener("input", () => { sync(); redraw(); });
  }
}

function polygon(ctx, pts, stroke, fill) {
  ctx.beginPath();
  ctx.moveTo(pts[0], pts[1]);
  for (let i = 2; i < pts.length; i += 2) ctx.lineTo(pts[i], pts[i + 1]);
  ctx.closePath();
  if (fill) { ctx.fillStyle = fill; ctx.fill(); }
  ctx.strokeStyle = stroke;
  ctx.stroke();
}

// apex edges in one color, base edge in another
function triangle(ctx, t, width = 2) {
  ctx.lineWidth = width;
  ctx.strokeStyle = APEX;
  ctx.beginPath();
  ctx.moveTo(t[2], t[3]);
  ctx.lineTo(t[0], t[1]);
  ctx.lineTo(t[4], t[5]);
  ctx.stroke();
  ctx.strokeStyle = BASE;
  ctx.beginPath();
  ctx.moveTo(t[2], t[3]);
  ctx.lineTo(t[4], t[5]);
  ctx.stroke();
}

function drawOffset() {
  const ctx = $("offset-canvas").getContext("2d");
  const r = compareOffset(200, 200, num("omega"), num("theta"), num("base"),
    num("along"), num("across"), num("turn"));
  const [triIou, rectIou, correct] = r;
  const triA = r.slice(3, 9), triB = r.slice(9, 15);
  const rectA = r.slice(15, 23), rectB = r.slice(23, 31);
  ctx.clearRect(0, 0, 400, 400);
  ctx.lineWidth = 1;
  polygon(ctx, rectA, "#999", "rgba(0,0,0,0.05)");
  polygon(ctx, rectB, "#999", "rgba(0,0,0,0.05)");
  triangle(ctx, triA, 2);
  ctx.setLineDash([5, 4]);
  triangle(ctx, triB, 2);
  ctx.setLineDash([]);
  $("offset-stat").textContent =
    `triangle IOU ${triIou.toFixed(3)} · rectangle IOU ${rectIou.toFixed(3)} · ` +
    `metric: ${correct ? "correct" : "incorrect"}`;
}

function drawLabels() {
  const canvas = $("label-canvas");
  const size = canvas.width;
  const rgba = renderLabels(num("label-seed"), size, num("label-k"), num("rotation"));
  canvas.getContext("2d").putImageData(new ImageData(new Uint8ClampedArray(rgba), size, size), 0, 0);
}

let peakDemo = null;
let peakSeed = null;

function drawPeaks() {
  const canvas = $("peak-canvas");
  const size = canvas.width;
  if (peakSeed !== num("peak-seed")) {
    if (peakDemo) peakDemo.free();
    peakSeed = num("peak-seed");
    peakDemo = new PeakDemo(peakSeed, size, 6);
  }
  const ctx = canvas.getContext("2d");
  ctx.putImageData(new ImageData(new Uint8ClampedArray(peakDemo.heatmap()), size, size), 0, 0);
  const flat = peakDemo.peaks(num("threshold"), num("radius"), 40);
  const scores = [];
  for (let i = 0; i < flat.length; i += 7) {
    triangle(ctx, flat.slice(i, i + 6), 2);
    scores.push(flat[i + 6].toFixed(2));
  }
  $("peak-stat").textContent = `${scores.length} peaks: ${scores.join(", ") || "none (re-image)"}`;
}

function guarded(fn) {
  return () => {
    try {
      fn();
      $("error").textContent = "";
    } catch (e) {
      $("error").textContent = String(e);
    }
  };
}

await init();
const views = [["offset-controls", drawOffset], ["label-controls", drawLabels], ["peak-controls", drawPeaks]];
for (const [id, draw] of views) {
  const redraw = guarded(draw);
  bindOutputs(id, redraw);
  redraw();
}
