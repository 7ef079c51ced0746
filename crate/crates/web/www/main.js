import init, { qaoaLandscape, runCampaign, simulateQasm } from "./pkg/vqa_bench_web.js";

const $ = (id) => document.getElementById(id);

function guarded(out, f) {
  return () => {
    out.classList.remove("error");
    try {
      f();
    } catch (e) {
      out.classList.add("error");
      out.textContent = String(e);
    }
  };
}

function drawLandscape() {
  const res = Number($("res").value);
  const data = qaoaLandscape($("graph").value, res);
  const ground = data[data.length - 1];
  const values = data.subarray(0, res * res);
  let lo = Infinity, hi = -Infinity, arg = 0;
  values.forEach((v, i) => {
    if (v < lo) { lo = v; arg = i; }
    hi = Math.max(hi, v);
  });
  const canvas = $("canvas");
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(res, res);
  values.forEach((v, i) => {
    const t = hi > lo ? (v - lo) / (hi - lo) : 0;
    // Row 0 is β = 0; draw it at the bottom.
    const r = res - 1 - Math.floor(i / res), c = i % res;
    const p = 4 * (r * res + c);
    img.data[p] = 255 * t;
    img.data[p + 1] = 80 + 120 * t;
    img.data[p + 2] = 255 * (1 - t);
    img.data[p + 3] = 255;
  });
  const tmp = new OffscreenCanvas(res, res);
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
  const alpha = (Math.PI * (arg % res)) / res, beta = (Math.PI / 2) * Math.floor(arg / res) / res;
  $("landscape-out").textContent =
    `grid minimum ${lo.toFixed(6)} at α=${alpha.toFixed(3)}, β=${beta.toFixed(3)}; exact ground energy ${ground.toFixed(6)}`;
}

function drawHistogram(costs, lo, hi) {
  const canvas = $("hist");
  const ctx = canvas.getContext("2d");
  const bins = new Array(64).fill(0);
  for (const c of costs) {
    const k = hi > lo ? Math.min(63, Math.floor(((c - lo) / (hi - lo)) * 64)) : 0;
    bins[k]++;
  }
  const top = Math.max(...bins);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#2a6";
  const w = canvas.width / 64;
  bins.forEach((b, k) => {
    const h = (b / top) * (canvas.height - 4);
    ctx.fillRect(k * w, canvas.height - h, w - 1, h);
  });
}

function campaign() {
  const doc = JSON.parse(
    runCampaign($("graph").value, $("ansatz").value, Number($("layers").value), Number($("traj").value), Number($("seed").value)),
  );
  const s = doc.summary;
  const costs = doc.final_costs;
  drawHistogram(costs, Math.min(...costs), Math.max(...costs));
  const levels = doc.levels.levels
    .map((l) => `  ${l.center.toFixed(9)}  count ${l.count}${l.sparse ? "  (sparse)" : ""}`)
    .join("\n");
  $("campaign-out").textContent =
    `ground energy ${doc.ground_energy}\n` +
    `best ${s.best_cost}  converged ${s.converged}/${s.n_trajectories}  convergence ratio ${s.convergence_ratio.toFixed(3)}\n` +
    `wall time ${(s.wall_time_ns / 1e6).toFixed(1)} ms\nlevels:\n${levels}`;
}

function simulate() {
  const raw = $("params").value.trim();
  const params = new Float64Array(raw === "" ? [] : raw.split(",").map(Number));
  const top = JSON.parse(simulateQasm($("qasm").value, params, 16));
  $("qasm-out").textContent = top
    .map(([bits, p]) => `${bits}  ${p.toFixed(6)}  ${"#".repeat(Math.round(p * 50))}`)
    .join("\n");
}

await init();
$("landscape").onclick = guarded($("landscape-out"), drawLandscape);
$("campaign").onclick = guarded($("campaign-out"), campaign);
$("simulate").onclick = guarded($("qasm-out"), simulate);
guarded($("landscape-out"), drawLandscape)();
