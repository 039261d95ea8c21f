/** Single-page editor wiring: term browser, range edits, map previews.
 *
 * All model state lives on the server; this class holds only view state
 * (which term, which scene, the pending draft) and re-renders panels
 * from fetched JSON after every transition. Submitting edits targets the
 * version the user is looking at, so a concurrent writer surfaces as a
 * stale-version notice rather than a silent overwrite.
 */

import { ApiClient, ApiError, StaleVersion } from "./api.js";
import { diffGrids } from "./diff.js";
import { renderHeatmap, renderMapPanel, MapPanelHandle } from "./heatmap.js";
import {
  DraftError,
  EDIT_KINDS,
  EditKind,
  buildOp,
} from "./ops.js";
import {
  describeBinSpan,
  rangeForBinSpan,
  snapSelection,
  SnappedRange,
} from "./snap.js";
import { renderStepPlot } from "./stepplot.js";
import type {
  EditOpWire,
  Interval,
  SceneSummary,
  Term,
  Term1D,
  TermSummary,
} from "./types.js";

interface Selection1D {
  kind: "1d";
  snapped: SnappedRange;
}

interface Selection2D {
  kind: "2d";
  x: SnappedRange;
  y: SnappedRange;
}

type Selection = Selection1D | Selection2D;

/** A submitted edit remembered for before/after comparison. */
interface LastEdit {
  baseVersion: number;
  newVersion: number;
  termId: string;
}

export class App {
  head = -1;
  termList: TermSummary[] = [];
  scenes: SceneSummary[] = [];
  term: Term | null = null;
  termBefore: Term1D | null = null;
  selection: Selection | null = null;
  lastEdit: LastEdit | null = null;
  sceneId: string | null = null;
  /** Map panels from the latest preview render, for inspection. */
  panels: MapPanelHandle[] = [];

  private editKind: EditKind = "flatten_range";
  private readonly els: Record<string, HTMLElement> = {};

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {}

  async init(): Promise<void> {
    this.buildSkeleton();
    this.head = (await this.api.headVersion()).version;
    this.termList = await this.api.terms(this.head);
    this.scenes = await this.api.scenes();
    this.sceneId = this.scenes[0]?.scene_id ?? null;
    this.renderSidebar();
    this.renderEditor();
    if (this.termList.length > 0) {
      await this.selectTerm(this.termList[0].id);
    }
  }

  private buildSkeleton(): void {
    this.root.innerHTML = "";
    const make = (id: string, tag = "div") => {
      const el = document.createElement(tag);
      el.id = id;
      return el;
    };
    const sidebar = make("sidebar", "nav");
    const main = make("main", "main");
    const plot = make("plot", "section");
    const editor = make("editor", "section");
    const status = make("status", "p");
    const panels = make("panels", "section");
    main.append(plot, editor, status, panels);
    this.root.append(sidebar, main);
    Object.assign(this.els, { sidebar, plot, editor, status, panels });
  }

  private renderSidebar(): void {
    const nav = this.els.sidebar;
    nav.innerHTML = "";
    const heading = document.createElement("h2");
    heading.textContent = `model v${this.head}`;
    heading.id = "headline";
    nav.appendChild(heading);

    const list = document.createElement("ul");
    list.id = "termlist";
    for (const t of this.termList) {
      const item = document.createElement("li");
      const btn = document.createElement("button");
      btn.textContent = `${t.id} (${t.type})`;
      btn.dataset.term = t.id;
      if (t.edited_bins > 0) btn.classList.add("has-edits");
      if (this.term?.id === t.id) btn.classList.add("active");
      btn.addEventListener("click", () => void this.selectTerm(t.id));
      item.appendChild(btn);
      list.appendChild(item);
    }
    nav.appendChild(list);

    const sceneLabel = document.createElement("label");
    sceneLabel.textContent = "preview scene";
    const scenePick = document.createElement("select");
    scenePick.id = "scenepick";
    for (const s of this.scenes) {
      const opt = document.createElement("option");
      opt.value = s.scene_id;
      opt.textContent = `${s.scene_id} (${s.rows}x${s.cols})`;
      scenePick.appendChild(opt);
    }
    if (this.sceneId) scenePick.value = this.sceneId;
    scenePick.addEventListener("change", () => {
      this.sceneId = scenePick.value;
      void this.renderPanels();
    });
    sceneLabel.appendChild(scenePick);
    nav.appendChild(sceneLabel);
  }

  async selectTerm(termId: string): Promise<void> {
    this.term = await this.api.term(this.head, termId);
    this.selection = null;
    this.termBefore = null;
    this.renderSidebar();
    this.renderPlot();
    this.renderEditor();
    await this.renderPanels();
  }

  /** Raw drag on the 1D plot, in feature-value space. */
  select1D(rawLo: number, rawHi: number): void {
    if (!this.term || this.term.type !== "1d") return;
    const snapped = snapSelection(this.term.edges, rawLo, rawHi);
    this.selection = { kind: "1d", snapped };
    this.renderPlot();
    this.renderEditor();
  }

  /** Cell-rectangle pick on the 2D heatmap, inclusive bin indices. */
  select2D(x0: number, x1: number, y0: number, y1: number): void {
    if (!this.term || this.term.type !== "2d") return;
    this.selection = {
      kind: "2d",
      x: rangeForBinSpan(this.term.edges_x, x0, x1),
      y: rangeForBinSpan(this.term.edges_y, y0, y1),
    };
    this.renderPlot();
    this.renderEditor();
  }

  clearSelection(): void {
    this.selection = null;
    this.renderPlot();
    this.renderEditor();
  }

  selectionRange(): Interval | [Interval, Interval] | null {
    if (!this.selection) return null;
    if (this.selection.kind === "1d") return this.selection.snapped.range;
    return [this.selection.x.range, this.selection.y.range];
  }

  private renderPlot(): void {
    const host = this.els.plot;
    if (!this.term) {
      host.textContent = "no term selected";
      return;
    }
    const title = document.createElement("h3");
    title.textContent = this.term.id;
    host.innerHTML = "";
    host.appendChild(title);
    const mount = document.createElement("div");
    mount.id = "plotmount";
    host.appendChild(mount);
    if (this.term.type === "1d") {
      const sel =
        this.selection?.kind === "1d"
          ? { first: this.selection.snapped.first, last: this.selection.snapped.last }
          : null;
      renderStepPlot(mount, this.term, {
        selection: sel,
        overlay: this.termBefore,
        onSelect: (lo, hi) => this.select1D(lo, hi),
      });
    } else {
      const sel =
        this.selection?.kind === "2d"
          ? {
              x0: this.selection.x.first,
              x1: this.selection.x.last,
              y0: this.selection.y.first,
              y1: this.selection.y.last,
            }
          : null;
      renderHeatmap(mount, this.term, {
        selection: sel,
        onSelectCells: (x0, x1, y0, y1) => this.select2D(x0, x1, y0, y1),
      });
    }
  }

  private renderEditor(): void {
    const host = this.els.editor;
    host.innerHTML = "";
    if (!this.term) return;

    const form = document.createElement("form");
    form.id = "editform";
    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.submit();
    });

    const selNote = document.createElement("p");
    selNote.id = "selectiontext";
    selNote.textContent = this.describeSelection();
    form.appendChild(selNote);

    const kindPick = document.createElement("select");
    kindPick.id = "kindpick";
    for (const k of EDIT_KINDS) {
      const opt = document.createElement("option");
      opt.value = k;
      opt.textContent = k;
      kindPick.appendChild(opt);
    }
    kindPick.value = this.editKind;
    kindPick.addEventListener("change", () => {
      this.editKind = kindPick.value as EditKind;
      this.renderEditor();
    });
    form.appendChild(labeled("edit", kindPick));

    const param = document.createElement("input");
    param.id = "paraminput";
    param.name = "param";
    const paramName = { flatten_range: "value", scale: "factor", shift: "delta", set_value: "value" }[this.editKind];
    param.placeholder =
      this.editKind === "flatten_range" ? 'number or "min_in_range"' : paramName;
    if (this.editKind === "flatten_range") param.value = "min_in_range";
    form.appendChild(labeled(paramName, param));

    const author = document.createElement("input");
    author.id = "authorinput";
    author.placeholder = "author";
    form.appendChild(labeled("author", author));

    const note = document.createElement("input");
    note.id = "noteinput";
    note.placeholder = "why";
    form.appendChild(labeled("note", note));

    const submit = document.createElement("button");
    submit.type = "submit";
    submit.id = "submitbtn";
    submit.textContent = `apply to v${this.head}`;
    // a range edit without a range would silently hit the whole domain;
    // require an explicit selection first
    submit.disabled = this.selection === null;
    form.appendChild(submit);

    const clear = document.createElement("button");
    clear.type = "button";
    clear.id = "clearbtn";
    clear.textContent = "clear selection";
    clear.addEventListener("click", () => this.clearSelection());
    form.appendChild(clear);

    host.appendChild(form);
  }

  private describeSelection(): string {
    if (!this.term) return "";
    if (!this.selection) return "drag on the plot to select a range";
    if (this.selection.kind === "1d" && this.term.type === "1d") {
      const s = this.selection.snapped;
      const span = describeBinSpan(this.term.edges, s.first, s.last);
      const n = s.last - s.first + 1;
      return `selected ${n} bin${n === 1 ? "" : "s"}: ${span}`;
    }
    if (this.selection.kind === "2d" && this.term.type === "2d") {
      const sx = describeBinSpan(this.term.edges_x, this.selection.x.first, this.selection.x.last);
      const sy = describeBinSpan(this.term.edges_y, this.selection.y.first, this.selection.y.last);
      return `selected cells: ${this.term.feature_x} ${sx}, ${this.term.feature_y} ${sy}`;
    }
    return "";
  }

  /** Build the pending op from current form state. */
  draftOps(): EditOpWire[] {
    if (!this.term || !this.selection) return [];
    const params = {
      factor: inputValue("paraminput"),
      delta: inputValue("paraminput"),
      value: inputValue("paraminput"),
    };
    const op = buildOp(
      this.term,
      this.editKind,
      this.selectionRange(),
      params,
      inputValue("authorinput") ?? "",
      inputValue("noteinput") ?? "",
    );
    return [op];
  }

  async submit(): Promise<void> {
    if (!this.term || !this.selection) return;
    const base = this.head;
    const termId = this.term.id;
    let ops: EditOpWire[];
    try {
      ops = this.draftOps();
    } catch (err) {
      if (err instanceof DraftError) {
        this.setStatus(`invalid draft: ${err.message}`, "error");
        return;
      }
      throw err;
    }
    const before = this.term.type === "1d" ? this.term : null;
    try {
      const result = await this.api.submitEdits(base, ops);
      this.head = result.version;
      this.lastEdit = { baseVersion: base, newVersion: result.version, termId };
      this.termBefore = before;
      this.term = await this.api.term(this.head, termId);
      this.selection = null;
      const summary = result.diff
        .map((d) => `${d.term}: ${d.bins_changed} bins, max delta ${d.max_abs_delta.toFixed(3)}`)
        .join("; ");
      this.setStatus(
        `v${base} -> v${result.version} accepted (${summary || "no score change"})`,
        "ok",
      );
      this.renderSidebar();
      this.renderPlot();
      this.renderEditor();
      await this.renderPanels();
    } catch (err) {
      if (err instanceof StaleVersion) {
        const current = (await this.api.headVersion()).version;
        this.setStatus(
          `v${base} is stale; head is now v${current}. Refresh to redraft.`,
          "conflict",
        );
        this.renderRefresh(current);
      } else if (err instanceof ApiError) {
        this.setStatus(`rejected: ${err.detail}`, "error");
      } else {
        throw err;
      }
    }
  }

  private renderRefresh(current: number): void {
    const btn = document.createElement("button");
    btn.id = "refreshbtn";
    btn.textContent = `refresh to v${current}`;
    btn.addEventListener("click", () => {
      void (async () => {
        this.head = current;
        this.termList = await this.api.terms(this.head);
        if (this.term) await this.selectTerm(this.term.id);
        this.setStatus(`now at v${current}`, "ok");
      })();
    });
    this.els.status.appendChild(btn);
  }

  private setStatus(text: string, tone: "ok" | "error" | "conflict"): void {
    const el = this.els.status;
    el.textContent = text;
    el.className = `status-${tone}`;
  }

  /** Before/after map panels for the preview scene.
   *
   * After an edit: left column is the pre-edit version, right column the
   * new head, for both the edited term's contribution map and the model
   * probability map. With no edit yet, just the current head's panels.
   */
  async renderPanels(): Promise<void> {
    const host = this.els.panels;
    host.innerHTML = "";
    this.panels = [];
    if (!this.sceneId || !this.term) return;
    const scene = this.sceneId;
    const termId = this.lastEdit?.termId ?? this.term.id;

    const versions: Array<{ v: number; label: string }> = this.lastEdit
      ? [
          { v: this.lastEdit.baseVersion, label: "before" },
          { v: this.lastEdit.newVersion, label: "after" },
        ]
      : [{ v: this.head, label: "current" }];

    for (const { v, label } of versions) {
      const imp = await this.api.importance(v, scene, termId);
      this.panels.push(
        renderMapPanel(host, imp.grid, "score", `${termId} v${v} (${label})`),
      );
    }
    for (const { v, label } of versions) {
      const pred = await this.api.predict(v, scene);
      this.panels.push(
        renderMapPanel(
          host,
          pred.probability,
          "probability",
          `probability v${v} (${label})`,
        ),
      );
    }

    if (this.lastEdit) {
      const [impBefore, impAfter, probBefore, probAfter] = this.panels;
      const termDiff = diffGrids(impBefore.values, impAfter.values);
      const probDiff = diffGrids(probBefore.values, probAfter.values);
      const note = document.createElement("p");
      note.id = "paneldiff";
      note.dataset.termChanged = String(termDiff.changed);
      note.dataset.probChanged = String(probDiff.changed);
      note.textContent =
        `${termDiff.changed} pixels moved in ${termId}; ` +
        `${probDiff.changed} prediction pixels changed`;
      host.appendChild(note);
    }
  }
}

function labeled(text: string, control: HTMLElement): HTMLLabelElement {
  const l = document.createElement("label");
  l.textContent = text + " ";
  l.appendChild(control);
  return l;
}

function inputValue(id: string): string | undefined {
  const el = document.getElementById(id) as HTMLInputElement | null;
  return el?.value;
}

/** Boot against the service at `base` (default: same origin). */
export async function boot(
  root: HTMLElement,
  base = "",
  fetchFn?: typeof fetch,
): Promise<App> {
  const app = new App(root, new ApiClient(base, fetchFn));
  await app.init();
  return app;
}
