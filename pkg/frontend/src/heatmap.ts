/** Heatmap views: pair-term score surfaces and scene-sized map panels.
 *
 * Pair terms render as an SVG cell grid (tens of cells, selectable);
 * scene maps render into a canvas (thousands of pixels, view-only). In
 * DOM implementations without 2D canvas support the map panel skips
 * painting but still carries its numeric grid, which is what tests and
 * the diff logic consume.
 */

import { divergingColor, probabilityColor, symmetricMax } from "./palette.js";
import type { GridData, Term2D } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export const CELL = 26;
export const HEAT_MARGIN = { left: 54, top: 10, right: 10, bottom: 40 };

export interface HeatmapHandle {
  svg: SVGSVGElement;
  /** Selected cell rectangle, inclusive bin indices, or null. */
  selection: { x0: number; x1: number; y0: number; y1: number } | null;
}

export interface HeatmapOptions {
  /** Cell-rectangle drag committed (inclusive bin indices per axis). */
  onSelectCells?(x0: number, x1: number, y0: number, y1: number): void;
  selection?: { x0: number; x1: number; y0: number; y1: number } | null;
}

export function renderHeatmap(
  container: HTMLElement,
  term: Term2D,
  opts: HeatmapOptions = {},
): HeatmapHandle {
  const nx = term.edges_x.length + 1;
  const ny = term.edges_y.length + 1;
  const width = HEAT_MARGIN.left + nx * CELL + HEAT_MARGIN.right;
  const height = HEAT_MARGIN.top + ny * CELL + HEAT_MARGIN.bottom;
  const svg = document.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("class", "heatmap");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.setAttribute("data-term", term.id);

  const maxAbs = symmetricMax(term.scores.flat());
  // y axis runs upward: row 0 (lowest y bin) at the bottom
  const cellY = (j: number) => HEAT_MARGIN.top + (ny - 1 - j) * CELL;
  for (let i = 0; i < nx; i++) {
    for (let j = 0; j < ny; j++) {
      const cell = document.createElementNS(SVG_NS, "rect");
      cell.setAttribute("x", String(HEAT_MARGIN.left + i * CELL));
      cell.setAttribute("y", String(cellY(j)));
      cell.setAttribute("width", String(CELL - 1));
      cell.setAttribute("height", String(CELL - 1));
      cell.setAttribute("class", "heatcell");
      cell.setAttribute("data-x", String(i));
      cell.setAttribute("data-y", String(j));
      cell.setAttribute("data-score", String(term.scores[i][j]));
      cell.setAttribute("fill", divergingColor(term.scores[i][j] / maxAbs));
      if (term.edited_mask[i][j]) {
        cell.classList.add("editedcell");
      }
      svg.appendChild(cell);
    }
  }

  if (opts.selection) {
    const s = opts.selection;
    const outline = document.createElementNS(SVG_NS, "rect");
    outline.setAttribute("class", "cellselection");
    outline.setAttribute("x", String(HEAT_MARGIN.left + s.x0 * CELL - 1));
    outline.setAttribute("y", String(cellY(s.y1) - 1));
    outline.setAttribute("width", String((s.x1 - s.x0 + 1) * CELL + 1));
    outline.setAttribute("height", String((s.y1 - s.y0 + 1) * CELL + 1));
    svg.appendChild(outline);
  }

  // axis edge labels
  for (let i = 0; i < term.edges_x.length; i++) {
    const t = document.createElementNS(SVG_NS, "text");
    t.setAttribute("x", String(HEAT_MARGIN.left + (i + 1) * CELL));
    t.setAttribute("y", String(height - HEAT_MARGIN.bottom + 14));
    t.setAttribute("class", "ticklabel");
    t.textContent = short(term.edges_x[i]);
    svg.appendChild(t);
  }
  for (let j = 0; j < term.edges_y.length; j++) {
    const t = document.createElementNS(SVG_NS, "text");
    t.setAttribute("x", "6");
    t.setAttribute("y", String(cellY(j) + 3));
    t.setAttribute("class", "ticklabel");
    t.textContent = short(term.edges_y[j]);
    svg.appendChild(t);
  }
  const xl = document.createElementNS(SVG_NS, "text");
  xl.setAttribute("x", String(HEAT_MARGIN.left));
  xl.setAttribute("y", String(height - 6));
  xl.setAttribute("class", "axisname");
  xl.textContent = term.feature_x;
  svg.appendChild(xl);
  const yl = document.createElementNS(SVG_NS, "text");
  yl.setAttribute("x", "6");
  yl.setAttribute("y", String(HEAT_MARGIN.top));
  yl.setAttribute("class", "axisname");
  yl.textContent = term.feature_y;
  svg.appendChild(yl);

  const handle: HeatmapHandle = { svg, selection: opts.selection ?? null };

  if (opts.onSelectCells) {
    let start: { i: number; j: number } | null = null;
    const cellFromEvent = (ev: MouseEvent) => {
      const box = svg.getBoundingClientRect();
      const px = ev.clientX - box.left - HEAT_MARGIN.left;
      const py = ev.clientY - box.top - HEAT_MARGIN.top;
      const i = Math.max(0, Math.min(nx - 1, Math.floor(px / CELL)));
      const j = Math.max(0, Math.min(ny - 1, ny - 1 - Math.floor(py / CELL)));
      return { i, j };
    };
    svg.addEventListener("mousedown", (ev) => {
      start = cellFromEvent(ev as MouseEvent);
    });
    svg.addEventListener("mouseup", (ev) => {
      if (!start) return;
      const end = cellFromEvent(ev as MouseEvent);
      const x0 = Math.min(start.i, end.i);
      const x1 = Math.max(start.i, end.i);
      const y0 = Math.min(start.j, end.j);
      const y1 = Math.max(start.j, end.j);
      start = null;
      opts.onSelectCells!(x0, x1, y0, y1);
    });
  }

  container.replaceChildren(svg);
  return handle;
}

export type PanelKind = "score" | "probability" | "binary";

export interface MapPanelHandle {
  element: HTMLElement;
  canvas: HTMLCanvasElement;
  /** Row-major numeric grid backing the panel. */
  values: number[][];
  kind: PanelKind;
}

/** Scene-sized raster: diverging palette for scores, ramp for probabilities. */
export function renderMapPanel(
  container: HTMLElement,
  grid: GridData,
  kind: PanelKind,
  caption: string,
): MapPanelHandle {
  const wrap = document.createElement("figure");
  wrap.className = "mappanel";
  const canvas = document.createElement("canvas");
  canvas.width = grid.cols;
  canvas.height = grid.rows;
  canvas.className = "mapcanvas";
  canvas.setAttribute("data-kind", kind);
  canvas.setAttribute("data-name", grid.name);
  wrap.appendChild(canvas);
  const cap = document.createElement("figcaption");
  cap.textContent = caption;
  wrap.appendChild(cap);

  const ctx = canvas.getContext?.("2d") ?? null;
  if (ctx) {
    const image = ctx.createImageData(grid.cols, grid.rows);
    const maxAbs = kind === "score" ? symmetricMax(grid.values.flat()) : 1;
    let k = 0;
    for (let r = 0; r < grid.rows; r++) {
      for (let c = 0; c < grid.cols; c++) {
        const v = grid.values[r][c];
        const color =
          kind === "score"
            ? divergingColor(v / maxAbs)
            : probabilityColor(v);
        const [red, green, blue] = parseRgb(color);
        image.data[k++] = red;
        image.data[k++] = green;
        image.data[k++] = blue;
        image.data[k++] = 255;
      }
    }
    ctx.putImageData(image, 0, 0);
  }

  container.appendChild(wrap);
  return { element: wrap, canvas, values: grid.values, kind };
}

function parseRgb(color: string): [number, number, number] {
  const m = /rgb\((\d+), (\d+), (\d+)\)/.exec(color);
  if (!m) return [0, 0, 0];
  return [Number(m[1]), Number(m[2]), Number(m[3])];
}

function short(v: number): string {
  const a = Math.abs(v);
  if (a !== 0 && (a >= 1e4 || a < 1e-2)) return v.toExponential(1);
  return String(Math.round(v * 100) / 100);
}
