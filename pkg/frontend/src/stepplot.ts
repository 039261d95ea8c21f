/** Step plot for one-feature terms: piecewise-constant score curve,
 * shaded error band, edited-bin highlights, and drag range selection.
 *
 * All geometry lives in pure functions over a fixed plot frame so tests
 * can check coordinates without a layout engine; the DOM layer only
 * assembles elements from what the geometry returns. Mouse positions are
 * mapped through the svg's bounding rect, which degrades gracefully to
 * raw client coordinates in DOM implementations without layout.
 */

import { divergingColor, symmetricMax } from "./palette.js";
import type { Term1D } from "./types.js";

export const FRAME = {
  width: 640,
  height: 240,
  left: 48,
  right: 14,
  top: 12,
  bottom: 26,
};

const SVG_NS = "http://www.w3.org/2000/svg";

export interface PlotScale {
  xOf(value: number): number;
  valueAt(x: number): number;
  yOf(score: number): number;
  domain: [number, number];
  scoreRange: [number, number];
}

/** Finite drawing domain: the edge span padded so end bins stay visible. */
export function plotDomain(edges: number[]): [number, number] {
  if (edges.length === 0) return [-1, 1];
  const lo = edges[0];
  const hi = edges[edges.length - 1];
  const span = hi > lo ? hi - lo : Math.max(Math.abs(lo), 1);
  return [lo - 0.12 * span, hi + 0.12 * span];
}

export function makeScale(term: Term1D): PlotScale {
  const domain = plotDomain(term.edges);
  const innerW = FRAME.width - FRAME.left - FRAME.right;
  const innerH = FRAME.height - FRAME.top - FRAME.bottom;
  let sLo = 0;
  let sHi = 0;
  for (let i = 0; i < term.scores.length; i++) {
    const bar = term.error_bars?.[i] ?? 0;
    sLo = Math.min(sLo, term.scores[i] - (bar ?? 0));
    sHi = Math.max(sHi, term.scores[i] + (bar ?? 0));
  }
  if (sHi === sLo) {
    sHi = sLo + 1;
  }
  const pad = 0.06 * (sHi - sLo);
  const scoreRange: [number, number] = [sLo - pad, sHi + pad];
  return {
    domain,
    scoreRange,
    xOf: (v) =>
      FRAME.left +
      ((clamp(v, domain[0], domain[1]) - domain[0]) /
        (domain[1] - domain[0])) *
        innerW,
    valueAt: (x) =>
      domain[0] +
      (clamp(x - FRAME.left, 0, innerW) / innerW) * (domain[1] - domain[0]),
    yOf: (s) =>
      FRAME.top +
      (1 - (s - scoreRange[0]) / (scoreRange[1] - scoreRange[0])) * innerH,
  };
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

export interface BinGeometry {
  bin: number;
  x0: number;
  x1: number;
  y: number;
}

/** Horizontal segment of each bin at its score height. */
export function stepSegments(term: Term1D, scale: PlotScale): BinGeometry[] {
  const out: BinGeometry[] = [];
  const n = term.scores.length;
  for (let i = 0; i < n; i++) {
    const left = i === 0 ? scale.domain[0] : term.edges[i - 1];
    const right = i === n - 1 ? scale.domain[1] : term.edges[i];
    out.push({
      bin: i,
      x0: scale.xOf(left),
      x1: scale.xOf(right),
      y: scale.yOf(term.scores[i]),
    });
  }
  return out;
}

/** SVG path of the full step curve, risers included. */
export function stepPath(segments: BinGeometry[]): string {
  if (segments.length === 0) return "";
  const parts = [`M ${f(segments[0].x0)} ${f(segments[0].y)}`];
  for (let i = 0; i < segments.length; i++) {
    const s = segments[i];
    if (i > 0) parts.push(`L ${f(s.x0)} ${f(s.y)}`);
    parts.push(`L ${f(s.x1)} ${f(s.y)}`);
  }
  return parts.join(" ");
}

function f(v: number): string {
  return String(Math.round(v * 100) / 100);
}

export interface BandRect {
  bin: number;
  x: number;
  y: number;
  width: number;
  height: number;
}

/** One shaded rect per bin that has an error bar; edited bins have their
 * bars nulled by the server, so they produce no band here. */
export function bandRects(term: Term1D, scale: PlotScale): BandRect[] {
  if (!term.error_bars) return [];
  const out: BandRect[] = [];
  const segs = stepSegments(term, scale);
  for (const seg of segs) {
    const bar = term.error_bars[seg.bin];
    if (bar === null || bar === undefined) continue;
    const yTop = scale.yOf(term.scores[seg.bin] + bar);
    const yBot = scale.yOf(term.scores[seg.bin] - bar);
    out.push({
      bin: seg.bin,
      x: seg.x0,
      y: yTop,
      width: seg.x1 - seg.x0,
      height: yBot - yTop,
    });
  }
  return out;
}

export interface StepPlotHandle {
  svg: SVGSVGElement;
  scale: PlotScale;
  /** Bins currently highlighted as the snapped selection. */
  selectionMask: boolean[] | null;
}

export interface StepPlotOptions {
  /** Raw drag committed, in feature-value space (lo <= hi). */
  onSelect?(rawLo: number, rawHi: number): void;
  /** Snapped bins to highlight, if a selection is active. */
  selection?: { first: number; last: number } | null;
  /** Previous version of the term to overlay as a dashed curve. */
  overlay?: Term1D | null;
}

export function renderStepPlot(
  container: HTMLElement,
  term: Term1D,
  opts: StepPlotOptions = {},
): StepPlotHandle {
  const scale = makeScale(term);
  const svg = document.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("class", "stepplot");
  svg.setAttribute("width", String(FRAME.width));
  svg.setAttribute("height", String(FRAME.height));
  svg.setAttribute("data-term", term.id);

  // zero line
  const zero = line(
    FRAME.left,
    scale.yOf(0),
    FRAME.width - FRAME.right,
    scale.yOf(0),
    "zeroline",
  );
  svg.appendChild(zero);

  // edge ticks along the x axis
  for (const e of term.edges) {
    const x = scale.xOf(e);
    svg.appendChild(
      line(x, FRAME.height - FRAME.bottom, x, FRAME.height - FRAME.bottom + 5, "tick"),
    );
  }
  svg.appendChild(axisLabels(term, scale));

  // edited bins: amber wash under everything else
  const segs = stepSegments(term, scale);
  for (const seg of segs) {
    if (!term.edited_mask[seg.bin]) continue;
    const r = rect(
      seg.x0,
      FRAME.top,
      seg.x1 - seg.x0,
      FRAME.height - FRAME.top - FRAME.bottom,
      "editedbin",
    );
    r.setAttribute("data-bin", String(seg.bin));
    svg.appendChild(r);
  }

  // snapped-selection highlight
  let selectionMask: boolean[] | null = null;
  if (opts.selection) {
    selectionMask = segs.map(
      (s) => s.bin >= opts.selection!.first && s.bin <= opts.selection!.last,
    );
    for (const seg of segs) {
      if (!selectionMask[seg.bin]) continue;
      const r = rect(
        seg.x0,
        FRAME.top,
        seg.x1 - seg.x0,
        FRAME.height - FRAME.top - FRAME.bottom,
        "selbin",
      );
      r.setAttribute("data-bin", String(seg.bin));
      svg.appendChild(r);
    }
  }

  // error band, suppressed automatically on edited bins (bars are null)
  for (const b of bandRects(term, scale)) {
    const r = rect(b.x, b.y, b.width, Math.max(b.height, 0.5), "band");
    r.setAttribute("data-bin", String(b.bin));
    svg.appendChild(r);
  }

  // previous-version overlay for before/after comparison
  if (opts.overlay) {
    const overlaySegs = stepSegments(
      { ...opts.overlay, edges: term.edges },
      scale,
    );
    const p = document.createElementNS(SVG_NS, "path");
    p.setAttribute("class", "curve-before");
    p.setAttribute("d", stepPath(overlaySegs));
    svg.appendChild(p);
  }

  // the step curve itself
  const path = document.createElementNS(SVG_NS, "path");
  path.setAttribute("class", "curve");
  path.setAttribute("d", stepPath(segs));
  svg.appendChild(path);

  // per-bin score markers colored by sign, handy at a glance
  const maxAbs = symmetricMax(term.scores);
  for (const seg of segs) {
    const m = rect(
      (seg.x0 + seg.x1) / 2 - 1.5,
      seg.y - 1.5,
      3,
      3,
      "binmark",
    );
    m.setAttribute("fill", divergingColor(term.scores[seg.bin] / maxAbs));
    m.setAttribute("data-bin", String(seg.bin));
    m.setAttribute("data-score", String(term.scores[seg.bin]));
    svg.appendChild(m);
  }

  // drag selection: a live rubber band, committed on mouseup
  if (opts.onSelect) {
    let dragStart: number | null = null;
    let rubber: SVGRectElement | null = null;
    const xFromEvent = (ev: MouseEvent) => {
      const rectBox = svg.getBoundingClientRect();
      return ev.clientX - rectBox.left;
    };
    svg.addEventListener("mousedown", (ev) => {
      dragStart = xFromEvent(ev as MouseEvent);
      rubber = rect(dragStart, FRAME.top, 0, FRAME.height - FRAME.top - FRAME.bottom, "dragrect");
      svg.appendChild(rubber);
    });
    svg.addEventListener("mousemove", (ev) => {
      if (dragStart === null || !rubber) return;
      const x = xFromEvent(ev as MouseEvent);
      rubber.setAttribute("x", String(Math.min(dragStart, x)));
      rubber.setAttribute("width", String(Math.abs(x - dragStart)));
    });
    svg.addEventListener("mouseup", (ev) => {
      if (dragStart === null) return;
      const x = xFromEvent(ev as MouseEvent);
      const lo = scale.valueAt(Math.min(dragStart, x));
      const hi = scale.valueAt(Math.max(dragStart, x));
      rubber?.remove();
      rubber = null;
      dragStart = null;
      opts.onSelect!(lo, hi);
    });
  }

  container.replaceChildren(svg);
  return { svg, scale, selectionMask };
}

function line(
  x1: number,
  y1: number,
  x2: number,
  y2: number,
  cls: string,
): SVGLineElement {
  const el = document.createElementNS(SVG_NS, "line") as SVGLineElement;
  el.setAttribute("x1", f(x1));
  el.setAttribute("y1", f(y1));
  el.setAttribute("x2", f(x2));
  el.setAttribute("y2", f(y2));
  el.setAttribute("class", cls);
  return el;
}

function rect(
  x: number,
  y: number,
  width: number,
  height: number,
  cls: string,
): SVGRectElement {
  const el = document.createElementNS(SVG_NS, "rect") as SVGRectElement;
  el.setAttribute("x", f(x));
  el.setAttribute("y", f(y));
  el.setAttribute("width", f(Math.max(width, 0)));
  el.setAttribute("height", f(Math.max(height, 0)));
  el.setAttribute("class", cls);
  return el;
}

function axisLabels(term: Term1D, scale: PlotScale): SVGGElement {
  const g = document.createElementNS(SVG_NS, "g") as SVGGElement;
  g.setAttribute("class", "axis");
  const labels: Array<[number, string]> = [];
  const ticks = pickTicks(term.edges);
  for (const e of ticks) labels.push([scale.xOf(e), short(e)]);
  for (const [x, text] of labels) {
    const t = document.createElementNS(SVG_NS, "text");
    t.setAttribute("x", f(x));
    t.setAttribute("y", String(FRAME.height - 8));
    t.setAttribute("class", "ticklabel");
    t.textContent = text;
    g.appendChild(t);
  }
  for (const s of [scale.scoreRange[0], 0, scale.scoreRange[1]]) {
    const t = document.createElementNS(SVG_NS, "text");
    t.setAttribute("x", "4");
    t.setAttribute("y", f(scale.yOf(s) + 3));
    t.setAttribute("class", "ticklabel");
    t.textContent = short(s);
    g.appendChild(t);
  }
  return g;
}

/** At most ~8 edge labels, evenly thinned. */
function pickTicks(edges: number[]): number[] {
  if (edges.length <= 8) return edges;
  const step = Math.ceil(edges.length / 8);
  return edges.filter((_, i) => i % step === 0);
}

function short(v: number): string {
  const a = Math.abs(v);
  if (a !== 0 && (a >= 1e4 || a < 1e-2)) return v.toExponential(1);
  return String(Math.round(v * 100) / 100);
}
