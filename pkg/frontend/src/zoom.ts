/**
 * Synchronized zoom/pan for side-by-side image comparison.
 *
 * One shared transform drives every registered viewport, so corresponding
 * pixels stay aligned while the annotator inspects fine detail. The
 * transform math is pure; only `attach` touches the DOM.
 */

export interface Transform {
  scale: number;
  x: number;
  y: number;
}

export const IDENTITY: Transform = { scale: 1, x: 0, y: 0 };

export const MIN_SCALE = 1;
export const MAX_SCALE = 8;

function clamp(value: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, value));
}

/** Zoom by `factor` keeping the point (px, py) fixed on screen. */
export function zoomAt(t: Transform, factor: number, px: number, py: number): Transform {
  const scale = clamp(t.scale * factor, MIN_SCALE, MAX_SCALE);
  const applied = scale / t.scale;
  if (applied === 1) {
    return t;
  }
  return {
    scale,
    x: px - (px - t.x) * applied,
    y: py - (py - t.y) * applied,
  };
}

export function pan(t: Transform, dx: number, dy: number): Transform {
  if (t.scale === 1) {
    return IDENTITY; // nothing to pan at base zoom
  }
  return { ...t, x: t.x + dx, y: t.y + dy };
}

export function toCss(t: Transform): string {
  return `translate(${t.x}px, ${t.y}px) scale(${t.scale})`;
}

export class SyncedZoom {
  private transform: Transform = IDENTITY;
  private targets: HTMLElement[] = [];

  reset(): void {
    this.transform = IDENTITY;
    this.apply();
  }

  current(): Transform {
    return this.transform;
  }

  private apply(): void {
    for (const el of this.targets) {
      el.style.transform = toCss(this.transform);
    }
  }

  /** Register an image wrapper; wheel zooms, drag pans, all in lockstep. */
  attach(viewport: HTMLElement, content: HTMLElement): void {
    this.targets.push(content);
    content.style.transformOrigin = "0 0";
    viewport.addEventListener("wheel", (event) => {
      event.preventDefault();
      const rect = viewport.getBoundingClientRect();
      const factor = event.deltaY < 0 ? 1.2 : 1 / 1.2;
      this.transform = zoomAt(
        this.transform,
        factor,
        event.clientX - rect.left,
        event.clientY - rect.top,
      );
      this.apply();
    });
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    viewport.addEventListener("pointerdown", (event) => {
      dragging = true;
      lastX = event.clientX;
      lastY = event.clientY;
      viewport.setPointerCapture(event.pointerId);
    });
    viewport.addEventListener("pointermove", (event) => {
      if (!dragging) {
        return;
      }
      this.transform = pan(this.transform, event.clientX - lastX, event.clientY - lastY);
      lastX = event.clientX;
      lastY = event.clientY;
      this.apply();
    });
    viewport.addEventListener("pointerup", () => {
      dragging = false;
    });
    viewport.addEventListener("dblclick", () => this.reset());
  }
}
