import init, { mode_shapes, inertia_scan, exceptional_inertia, energy_curve } from "./pkg/tipbeam_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#e377c2"];

function beam() {
  return [num("rho"), num("lambda"), num("length"), num("mass"), num("inertia")];
}

function guard(fn) {
  return () => {
    $("error").textContent = "";
    try {
      fn();
    } catch (e) {
      $("error").textContent = String(e);
    }
  };
}

// series: [{x, y, color, dash}], optional logY
function plot(canvas, series, { logY = false, xLabel = "", yLabel = "" } = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 44;
  ctx.clearRect(0, 0, w, h);
  const ty = (v) => (logY ? Math.log10(Math.max(v, 1e-300)) : v);
  let x0 = Infinity, x1 = -Infinity, y0 = Infinity, y1 = -Infinity;
  for (const s of series) {
    for (let i = 0; i < s.x.length; i++) {
      x0 = Math.min(x0, s.x[i]); x1 = Math.max(x1, s.x[i]);
      const y = ty(s.y[i]);
      if (Number.isFinite(y)) { y0 = Math.min(y0, y); y1 = Math.max(y1, y); }
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) { y0 -= 1; y1 += 1; }
  const m = 0.05 * (y1 - y0);
  y0 -= m; y1 += m;
  const sx = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const sy = (y) => h - pad + ((y0 - y) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.font = "12px system-ui";
  ctx.fillText(x0.toPrecision(3), pad, h - pad + 16);
  ctx.fillText(x1.toPrecision(3), w - pad - 30, h - pad + 16);
  const fmt = (v) => (logY ? "1e" + v.toFixed(1) : v.toPrecision(3));
  ctx.fillText(fmt(y1), 2, pad + 4);
  ctx.fillText(fmt(y0), 2, h - pad);
  ctx.fillText(xLabel, w / 2, h - 8);
  ctx.fillText(yLabel, 2, pad - 12);
  if (y0 < 0 && y1 > 0 && !logY) {
    ctx.strokeStyle = "#ddd";
    ctx.beginPath(); ctx.moveTo(pad, sy(0)); ctx.lineTo(w - pad, sy(0)); ctx.stroke();
  }
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.setLineDash(s.dash ? [6, 4] : []);
    ctx.beginPath();
    s.x.forEach((x, i) => {
      const y = ty(s.y[i]);
      i === 0 ? ctx.moveTo(sx(x), sy(y)) : ctx.lineTo(sx(x), sy(y));
    });
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function drawModes() {
  const curves = JSON.parse(mode_shapes(...beam(), $("op").value, parseInt($("count").value), 201));
  plot($("modes"), curves.map((c, i) => ({ x: c.x, y: c.u, color: COLORS[i % COLORS.length] })), { xLabel: "x", yLabel: "u" });
  $("modes-info").innerHTML = curves
    .map((c, i) => `<span style="color:${COLORS[i % COLORS.length]}">n=${c.index}: ω=${c.omega.toPrecision(6)}, u(L)=${c.tip_value.toExponential(2)}${c.nodal ? " (nodal)" : ""}</span>`)
    .join("<br>");
}

function scan() {
  const r = JSON.parse(inertia_scan(...beam(), parseInt($("lmax").value)));
  $("scan-info").textContent = r.exceptional
    ? `J is exceptional (ℓ = ${r.nearest_ell}); a nodal mode survives any boundary feedback.`
    : `J is generic; nearest exceptional value J_${r.nearest_ell} = ${r.nearest_j.toPrecision(8)} (relative distance ${r.relative_distance.toExponential(2)}).`;
  $("scan-table").innerHTML =
    "<tr><th>ℓ</th><th>J<sub>ℓ</sub></th></tr>" +
    r.entries.map(([ell, j]) => `<tr class="${ell === r.nearest_ell ? "near" : ""}"><td>${ell}</td><td>${j.toPrecision(12)}</td></tr>`).join("");
}

function energy() {
  const r = JSON.parse(
    energy_curve(...beam(), num("cubic"), num("gain"), num("amp-generic"), num("amp-nodal"), num("periods"), parseInt($("elements").value)),
  );
  const series = [{ x: r.t, y: r.energy, color: COLORS[0] }];
  if (r.limit_energy !== null) {
    series.push({ x: [r.t[0], r.t[r.t.length - 1]], y: [r.limit_energy, r.limit_energy], color: COLORS[1], dash: true });
  }
  plot($("energy"), series, { logY: true, xLabel: "t", yLabel: "energy (log)" });
  $("energy-info").textContent =
    `final / initial energy = ${r.final_fraction.toExponential(3)}` +
    (r.exceptional !== null ? `; exceptional ℓ = ${r.exceptional}, predicted limit energy ${r.limit_energy.toExponential(4)} (dashed)` : "; generic inertia");
}

function snap() {
  $("inertia").value = exceptional_inertia(num("rho"), num("length"), parseInt($("snap-ell").value));
  drawModes();
  scan();
}

await init();
$("modes-go").onclick = guard(drawModes);
$("scan-go").onclick = guard(scan);
$("energy-go").onclick = guard(energy);
$("snap").onclick = guard(snap);
guard(drawModes)();
guard(scan)();
