import init, { run_scenario, figure1, explore_small, presets } from "./pkg/aodv_web.js";

const $ = (id) => document.getElementById(id);
let steps = [];

function fillConfigs(select, list, withScenario) {
  if (withScenario) select.add(new Option("scenario default", ""));
  for (const p of list) select.add(new Option(`${p.name} (${p.config})`, p.name));
}

function showError(target, e) {
  target.innerHTML = `<span class="bad">${String(e)}</span>`;
}

function runCurrent() {
  try {
    const out = JSON.parse(run_scenario($("scenario").value, $("run-config").value));
    steps = out.steps;
    const run = out.run;
    const failed = run.checks.filter((c) => !c.passed);
    const loops = run.loops.length ? `<span class="bad">${run.loops.length} loop(s)</span>` : `<span class="good">loop-free</span>`;
    const checks = failed.length
      ? `<span class="bad">${failed.length} of ${run.checks.length} assertions failed</span>: ` +
        failed.map((c) => `line ${c.line} ${c.assertion} (${c.detail})`).join("; ")
      : `<span class="good">${run.checks.length} assertions hold</span>`;
    $("run-summary").innerHTML = `Under ${run.config}: ${loops}, ${checks}`;
    const dests = steps[0].nodes;
    $("dest").replaceChildren(...dests.map((d) => new Option(d, d)));
    $("step").max = steps.length - 1;
    $("step").value = steps.length - 1;
    showStep();
  } catch (e) {
    steps = [];
    showError($("run-summary"), e);
  }
}

function showStep() {
  if (!steps.length) return;
  const s = steps[Number($("step").value)];
  $("step-label").textContent = `${$("step").value}/${steps.length - 1} ${s.part ?? ""} ${s.event}`;
  $("tables").textContent = s.tables;
  $("records").textContent = s.records.join("\n");
  $("step-loops").innerHTML = s.loops.map((l) => `<div class="bad">${l}</div>`).join("");
  drawGraph(s, $("dest").value);
}

function drawGraph(s, dest) {
  const svg = $("graph");
  const w = svg.width.baseVal.value, h = svg.height.baseVal.value;
  const pos = {};
  s.nodes.forEach((n, i) => {
    const a = (2 * Math.PI * i) / s.nodes.length - Math.PI / 2;
    pos[n] = [w / 2 + 110 * Math.cos(a), h / 2 + 110 * Math.sin(a)];
  });
  const inLoop = s.loops.some((l) => l.startsWith(`loop for ${dest}:`));
  let out = `<defs><marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="6" markerHeight="6" orient="auto"><path d="M0,0L10,5L0,10z" fill="context-stroke"/></marker></defs>`;
  for (const [a, b] of s.links) {
    const [x1, y1] = pos[a], [x2, y2] = pos[b];
    out += `<line x1="${x1}" y1="${y1}" x2="${x2}" y2="${y2}" stroke="#bbb" stroke-width="6"/>`;
  }
  for (const [node, d, next] of s.routes) {
    if (d !== dest || node === next) continue;
    const [x1, y1] = pos[node], [x2, y2] = pos[next];
    const len = Math.hypot(x2 - x1, y2 - y1), ux = (x2 - x1) / len, uy = (y2 - y1) / len;
    const color = inLoop ? "#b00020" : "#0645ad";
    out += `<line x1="${x1 + ux * 20 - uy * 5}" y1="${y1 + uy * 20 + ux * 5}" x2="${x2 - ux * 20 - uy * 5}" y2="${y2 - uy * 20 + ux * 5}" stroke="${color}" stroke-width="2" marker-end="url(#arrow)"/>`;
  }
  for (const n of s.nodes) {
    const [x, y] = pos[n];
    const fill = n === dest ? "#ffe9a8" : "#fff";
    out += `<circle cx="${x}" cy="${y}" r="16" fill="${fill}" stroke="#333"/><text x="${x}" y="${y + 5}" text-anchor="middle">${n}</text>`;
  }
  svg.innerHTML = out;
}

function exploreNow() {
  $("explore-summary").textContent = "searching...";
  $("witnesses").replaceChildren();
  setTimeout(() => {
    try {
      const r = JSON.parse(explore_small($("explore-config").value, Number($("nodes").value), Number($("events").value)));
      $("explore-summary").textContent =
        `config ${$("explore-config").value}\n` +
        `states visited ${r.states_visited}, exhausted ${r.exhausted}\n` +
        `loops ${r.loops.length}, sequence-number decreases ${r.monotonicity_violations}`;
      r.witness_scenarios.slice(0, 20).forEach((text, i) => {
        const li = document.createElement("li");
        li.className = "witness";
        li.textContent = text.split("\n")[0] + ` (${text.split("\n").length} lines)`;
        li.onclick = () => {
          $("scenario").value = text;
          $("run-config").value = "";
          runCurrent();
          $("scenario").scrollIntoView();
        };
        $("witnesses").append(li);
      });
    } catch (e) {
      showError($("explore-summary"), e);
    }
  }, 10);
}

await init();
const list = JSON.parse(presets());
fillConfigs($("run-config"), list, true);
fillConfigs($("explore-config"), list, false);
$("run-config").value = "rfc-strict-loop";
$("explore-config").value = "aodv-uiuc";
for (const p of list) {
  const row = $("presets").insertRow();
  for (const v of [p.name, p.config, p.description]) row.insertCell().textContent = v;
}
$("load-figure1").onclick = () => { $("scenario").value = figure1(""); runCurrent(); };
$("load-ns2").onclick = () => { $("scenario").value = figure1("ns2"); $("run-config").value = "aodv-ns2"; runCurrent(); };
$("run").onclick = runCurrent;
$("step").oninput = showStep;
$("dest").onchange = showStep;
$("prev").onclick = () => { $("step").stepDown(); showStep(); };
$("next").onclick = () => { $("step").stepUp(); showStep(); };
$("explore").onclick = exploreNow;
$("scenario").value = figure1("");
runCurrent();
$("dest").value = "d";
showStep();
