import init, { simulate, consensusHeatmap, proxCurve } from "./pkg/dpgrr_demo.js";

const COLORS = { "dpg-rr": "#1f77b4", "dpg-sg": "#ff7f0e", "dpg-ig": "#2ca02c", "dgm": "#d62728" };
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function setStatus(msg, isError) {
  $("status").textContent = msg;
  $("status").className = isError ? "err" : "";
}

// Line plot; log scale drops non-positive values.
function plot(canvas, series, { log = false, title = "" } = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 48;
  ctx.clearRect(0, 0, W, H);
  const tf = log ? (v) => (v > 0 ? Math.log10(v) : NaN) : (v) => v;
  let xmin = Infinity, xmax = -Infinity, ymin = Infinity, ymax = -Infinity;
  for (const s of series) {
    xmin = Math.min(xmin, s.x[0]);
    xmax = Math.max(xmax, s.x[s.x.length - 1]);
    for (const v of s.y.map(tf)) if (Number.isFinite(v)) { ymin = Math.min(ymin, v); ymax = Math.max(ymax, v); }
  }
  if (!Number.isFinite(ymin)) return;
  if (ymax - ymin < 1e-12) { ymin -= 1; ymax += 1; }
  if (xmax <= xmin) xmax = xmin + 1;
  const px = (x) => pad + ((x - xmin) / (xmax - xmin)) * (W - 2 * pad);
  const py = (y) => H - pad + ((ymin - y) / (ymax - ymin)) * (H - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
  for (let i = 0; i <= 4; i++) {
    const y = ymin + ((ymax - ymin) * i) / 4;
    ctx.fillText(log ? `1e${y.toFixed(1)}` : y.toPrecision(3), 2, py(y) + 4);
    const x = xmin + ((xmax - xmin) * i) / 4;
    ctx.fillText(Number.isInteger(x) ? String(x) : x.toFixed(1), px(x) - 8, H - pad + 14);
  }
  ctx.fillText(title, pad, pad - 8);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    let pen = false;
    s.x.forEach((x, i) => {
      const y = tf(s.y[i]);
      if (!Number.isFinite(y)) { pen = false; return; }
      if (pen) ctx.lineTo(px(x), py(y)); else ctx.moveTo(px(x), py(y));
      pen = true;
    });
    ctx.stroke();
  }
}

function runSimulation() {
  const params = {
    m: num("sim-m"), n: num("sim-n"), d: num("sim-d"),
    lambda: num("sim-lambda"), gamma: num("sim-gamma"),
    epochs: num("sim-epochs"), seed: num("sim-seed"),
    topology: $("sim-topology").value,
    fixed_steps: num("sim-fixed") > 0 ? num("sim-fixed") : null,
  };
  setStatus("running...");
  // let the status paint before the synchronous run
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const res = JSON.parse(simulate(JSON.stringify(params)));
      const sub = res.curves.map((c) => ({ x: c.epoch, y: c.subopt, color: COLORS[c.algorithm] }));
      const con = res.curves.map((c) => ({ x: c.epoch, y: c.consensus, color: COLORS[c.algorithm] }));
      plot($("sim-subopt"), sub, { log: true, title: "F(x_hat) - F*" });
      plot($("sim-consensus"), con, { log: true, title: "max_j ||x_j - x_bar||" });
      $("sim-legend").innerHTML = res.curves
        .map((c) => `<span style="color:${COLORS[c.algorithm]}">${c.algorithm}</span>`)
        .join("");
      setStatus(`F* = ${res.f_star.toPrecision(10)}; ${(performance.now() - t0).toFixed(0)} ms`);
    } catch (e) {
      setStatus(String(e), true);
    }
  }, 10);
}

function drawHeatmap() {
  try {
    const fixed = num("hm-fixed");
    const h = JSON.parse(consensusHeatmap(num("hm-m"), $("hm-topology").value, num("hm-epoch"), fixed));
    const c = $("hm-canvas"), ctx = c.getContext("2d");
    const m = h.weights.length, cell = c.width / m;
    const peak = Math.max(...h.weights.flat());
    ctx.clearRect(0, 0, c.width, c.height);
    h.weights.forEach((row, j) => row.forEach((w, l) => {
      const v = Math.round(255 * (1 - w / peak));
      ctx.fillStyle = `rgb(${v},${v},255)`;
      ctx.fillRect(l * cell, j * cell, cell - 1, cell - 1);
    }));
    $("hm-info").textContent =
      `${h.factors} mixing steps; max |w - 1/m| = ${h.max_deviation.toExponential(2)}`;
  } catch (e) {
    $("hm-info").textContent = String(e);
  }
}

function drawProx() {
  const kind = $("prox-kind").value, lambda = num("prox-lambda"), gamma = num("prox-gamma");
  try {
    const p = JSON.parse(proxCurve(kind, lambda, gamma));
    plot($("prox-canvas"), [
      { x: p.x, y: p.x, color: "#bbb" },
      { x: p.x, y: p.prox, color: "#1f77b4" },
    ], { title: "prox(x) against x (grey: identity)" });
    $("prox-info").textContent = `lambda = ${lambda}, gamma = ${gamma}`;
  } catch (e) {
    $("prox-info").textContent = String(e);
  }
}

await init();
setStatus("ready");
$("sim-run").addEventListener("click", runSimulation);
for (const id of ["hm-m", "hm-topology", "hm-fixed", "hm-epoch"]) $(id).addEventListener("input", drawHeatmap);
for (const id of ["prox-kind", "prox-lambda", "prox-gamma"]) $(id).addEventListener("input", drawProx);
drawHeatmap();
drawProx();
runSimulation();
