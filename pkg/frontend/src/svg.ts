/** Tiny SVG document builder; no DOM required. */

export type Attrs = Record<string, string | number>;

function attrString(attrs: Attrs): string {
  return Object.entries(attrs)
    .map(([key, value]) => `${key}="${String(value)}"`)
    .join(" ");
}

function escapeText(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export class SvgBuilder {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {}

  open(tag: string, attrs: Attrs): this {
    this.parts.push(`<${tag} ${attrString(attrs)}>`);
    return this;
  }

  close(tag: string): this {
    this.parts.push(`</${tag}>`);
    return this;
  }

  element(tag: string, attrs: Attrs): this {
    this.parts.push(`<${tag} ${attrString(attrs)}/>`);
    return this;
  }

  text(content: string, attrs: Attrs): this {
    this.parts.push(`<text ${attrString(attrs)}>${escapeText(content)}</text>`);
    return this;
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      ...this.parts,
      "</svg>",
    ].join("\n");
  }
}

/** Linear mapping from a data range onto pixel coordinates. */
export class LinearScale {
  constructor(
    readonly domainMin: number,
    readonly domainMax: number,
    readonly rangeMin: number,
    readonly rangeMax: number,
  ) {}

  map(value: number): number {
    const span = this.domainMax - this.domainMin || 1;
    const t = (value - this.domainMin) / span;
    return this.rangeMin + t * (this.rangeMax - this.rangeMin);
  }

  /** A handful of round-ish tick values across the domain. */
  ticks(count = 4): number[] {
    const span = this.domainMax - this.domainMin || 1;
    const rawStep = span / count;
    const magnitude = 10 ** Math.floor(Math.log10(rawStep));
    const step = [1, 2, 5, 10].map((m) => m * magnitude).find((s) => s >= rawStep) ?? rawStep;
    const first = Math.ceil(this.domainMin / step) * step;
    const out: number[] = [];
    for (let v = first; v <= this.domainMax + 1e-12; v += step) {
      out.push(Number(v.toFixed(12)));
    }
    return out;
  }
}
