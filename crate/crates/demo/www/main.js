import init, { Demo } from "./pkg/m2i_demo.js";

const $ = (id) => document.getElementById(id);
const canvas = $("view-canvas");
const ctx = canvas.getContext("2d");
const colors = ["#d1495b", "#2e6fd0", "#e08a00", "#7b3fb5", "#1b998b"];

let demo;
let scene;

function frame(points) {
  let [x0, y0, x1, y1] = [Infinity, Infinity, -Infinity, -Infinity];
  for (const [x, y] of points) {
    x0 = Math.min(x0, x); y0 = Math.min(y0, y);
    x1 = Math.max(x1, x); y1 = Math.max(y1, y);
  }
  const pad = 10;
  const s = Math.min(canvas.width / (x1 - x0 + 2 * pad), canvas.height / (y1 - y0 + 2 * pad));
  const cx = (x0 + x1) / 2, cy = (y0 + y1) / 2;
  return ([x, y]) => [canvas.width / 2 + (x - cx) * s, canvas.height / 2 - (y - cy) * s];
}

function line(to, pts, color, width, alpha = 1, dash = []) {
  if (pts.length < 2) return;
  ctx.save();
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.globalAlpha = alpha;
  ctx.setLineDash(dash);
  ctx.beginPath();
  pts.forEach((p, i) => {
    const [u, v] = to(p);
    i ? ctx.lineTo(u, v) : ctx.moveTo(u, v);
  });
  ctx.stroke();
  ctx.restore();
}

function car(to, agent, color) {
  const h = agent.history;
  const [a, b] = [h[h.length - 2] ?? h[h.length - 1], h[h.length - 1]];
  const heading = Math.atan2(b[1] - a[1], b[0] - a[0]);
  const [u, v] = to(b);
  const [u2] = to([b[0] + 1, b[1]]);
  const s = u2 - u;
  ctx.save();
  ctx.translate(u, v);
  ctx.rotate(-heading);
  ctx.fillStyle = color;
  ctx.fillRect(-agent.length * s / 2, -agent.width * s / 2, agent.length * s, agent.width * s);
  ctx.restore();
}

function draw(overlay) {
  const all = scene.agents.flatMap((a) => [...a.history, ...a.future]);
  const to = frame(all);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (const lane of scene.lanes) line(to, lane, "#ccc", 1);
  const color = (id) => colors[Math.max(0, scene.pair.indexOf(id))];
  overlay(to, color);
  scene.agents.forEach((a) => {
    line(to, a.history, "#888", 3);
    line(to, a.future, "#2a9d3a", 2, 0.9, [6, 4]);
    car(to, a, color(a.id));
  });
}

function fmt(x) {
  return typeof x === "number" ? x.toFixed(3) : String(x);
}

function render() {
  if (!scene) return;
  const view = $("view").value;
  $("gapbox").style.visibility = view === "conditional" ? "visible" : "hidden";
  const head =
    `${scene.id}  intended ${scene.intended}  heuristic ${scene.label}  classifier ${scene.predicted}` +
    `  [none ${fmt(scene.probabilities[0])}, yield ${fmt(scene.probabilities[1])}, pass ${fmt(scene.probabilities[2])}]\n` +
    `closest approach ${fmt(scene.closest_approach)} m, threshold ${fmt(scene.threshold)} m\n`;
  try {
    if (view === "conditional") {
      const c = JSON.parse(demo.conditional(parseFloat($("gap").value)));
      draw((to, color) => {
        c.marginal.forEach((s) => line(to, s.trajectory, "#999", 1.5, 0.6, [2, 3]));
        c.conditional.forEach((s) => line(to, s.trajectory, color(c.reactor), 1 + 4 * s.confidence));
      });
      $("info").textContent = head +
        `${c.reactor} reacts to ${c.influencer} (predicted ${c.relation}), gap ${c.gap_time.toFixed(1)} s\n` +
        c.conditional.map((s, i) => `  sample ${i}: p=${fmt(s.confidence)}`).join("\n");
    } else {
      const p = JSON.parse(demo.predict(view));
      draw((to, color) => {
        p.samples.forEach((s) => {
          for (const [id, t] of Object.entries(s.trajectories)) line(to, t, color(id), 1 + 5 * s.probability, 0.8);
        });
      });
      $("info").textContent = head +
        `${view}: relation ${p.relation ?? "-"}  minADE ${fmt(p.minADE)}  minFDE ${fmt(p.minFDE)}  miss ${p.miss}\n` +
        p.samples.map((s, i) => `  joint sample ${i}: p=${fmt(s.probability)}`).join("\n");
    }
  } catch (e) {
    $("info").textContent = head + `error: ${e}`;
  }
}

function generate() {
  try {
    scene = JSON.parse(demo.scene($("template").value, BigInt($("seed").value || 0)));
    render();
  } catch (e) {
    $("info").textContent = `error: ${e}`;
  }
}

await init();
$("info").textContent = "training relation classifier...";
await new Promise((r) => setTimeout(r, 0));
demo = new Demo();
for (const t of Demo.templates()) $("template").add(new Option(t, t));
$("generate").onclick = generate;
$("view").onchange = render;
$("gap").oninput = () => {
  $("gapval").textContent = `${parseFloat($("gap").value).toFixed(1)} s`;
  render();
};
generate();
