import init, { position_utility_curve, iau_heatmap, trace } from "./pkg/ultimatum_browser.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function showError(el, e) {
  el.innerHTML = "";
  const p = document.createElement("p");
  p.className = "error";
  p.textContent = String(e.message ?? e);
  el.appendChild(p);
}

function drawCurve() {
  const canvas = $("curve");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  let values;
  try {
    values = position_utility_curve(num("curve-n"), num("curve-r1"), num("curve-r2"));
  } catch (e) {
    ctx.fillStyle = "#b00";
    ctx.fillText(String(e.message ?? e), 10, 20);
    return;
  }
  const pad = 30;
  const w = canvas.width - 2 * pad;
  const h = canvas.height - 2 * pad;
  const bar = w / values.length;
  ctx.fillStyle = "#333";
  values.forEach((v, i) => {
    const bh = v * h;
    ctx.fillStyle = "#4a7bd0";
    ctx.fillRect(pad + i * bar + 2, pad + h - bh, bar - 4, bh);
    ctx.fillStyle = "#333";
    ctx.fillText(String(i + 1), pad + i * bar + bar / 2 - 3, canvas.height - 10);
    ctx.fillText(v.toFixed(2), pad + i * bar + bar / 2 - 10, pad + h - bh - 4);
  });
}

function drawHeatmap() {
  const status = $("heat-status");
  const points = num("heat-points");
  status.textContent = "running...";
  // let the status paint before the synchronous run
  setTimeout(() => {
    const canvas = $("heat");
    const ctx = canvas.getContext("2d");
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const t0 = performance.now();
    let rates;
    try {
      rates = iau_heatmap(num("heat-n"), points, num("heat-reps"), num("heat-seed"));
    } catch (e) {
      status.textContent = String(e.message ?? e);
      return;
    }
    const pad = 40;
    const cell = (canvas.width - pad) / points;
    const lattice = Array.from({ length: points }, (_, i) => 1 + (4 * i) / Math.max(points - 1, 1));
    for (let u = 0; u < points; u++) {
      for (let c = 0; c < points; c++) {
        const r = rates[u * points + c];
        const x = pad + c * cell;
        const y = (points - 1 - u) * cell;
        ctx.fillStyle = `rgb(${Math.round(255 * r)}, ${Math.round(80 * (1 - r))}, ${Math.round(255 * (1 - r))})`;
        ctx.fillRect(x, y, cell, cell);
        ctx.fillStyle = "#fff";
        ctx.fillText(r.toFixed(2), x + cell / 2 - 10, y + cell / 2 + 4);
      }
    }
    ctx.fillStyle = "#333";
    lattice.forEach((v, i) => {
      ctx.fillText(v.toFixed(1), pad + i * cell + cell / 2 - 8, canvas.height - 5);
      ctx.fillText(v.toFixed(1), 5, (points - 1 - i) * cell + cell / 2 + 4);
    });
    status.textContent = `x: contribution width, y: utility width (${(performance.now() - t0).toFixed(0)} ms)`;
  }, 10);
}

function showTrace() {
  const out = $("trace");
  let data;
  try {
    data = JSON.parse(trace(num("trace-n"), num("trace-seed")));
  } catch (e) {
    showError(out, e);
    return;
  }
  const rows = data.authors
    .map((a, i) => `<tr><td>${i}</td><td>${a.share.toFixed(3)}</td><td>${a.u0.toFixed(2)}</td>` +
      `<td>${a.initial_position}</td><td>${a.final_position}</td><td>${a.payoff.toFixed(3)}</td></tr>`)
    .join("");
  const events = data.events.length
    ? data.events.map((e) => `<li>week ${e.round}: author ${e.issuer} moves ${e.from} &rarr; ${e.to} (${e.outcome})</li>`).join("")
    : "<li>no ultimatum</li>";
  out.innerHTML =
    `<p>${data.horizon} weeks, starting at ${(100 * data.start_progress).toFixed(0)}% progress; ` +
    `${data.rounds} weeks played, ${data.completed ? "completed" : "collapsed"}.</p>` +
    `<table><tr><th>author</th><th>share</th><th>u0</th><th>start</th><th>end</th><th>payoff</th></tr>${rows}</table>` +
    `<ul>${events}</ul>`;
}

await init();
for (const id of ["curve-n", "curve-r1", "curve-r2"]) $(id).addEventListener("input", drawCurve);
$("heat-run").addEventListener("click", drawHeatmap);
$("trace-run").addEventListener("click", showTrace);
drawCurve();
showTrace();
