/** Split a paragraph into plain/highlight segments from span offsets. */

export interface Segment {
  text: string;
  highlighted: boolean;
}

export function segments(text: string, spans: [number, number][]): Segment[] {
  const sorted = [...spans]
    .filter(([start, end]) => start < end && start >= 0 && end <= text.length)
    .sort((a, b) => a[0] - b[0]);
  const out: Segment[] = [];
  let cursor = 0;
  for (const [start, end] of sorted) {
    if (start < cursor) continue; // overlapping span: keep the earlier one
    if (start > cursor) out.push({ text: text.slice(cursor, start), highlighted: false });
    out.push({ text: text.slice(start, end), highlighted: true });
    cursor = end;
  }
  if (cursor < text.length) out.push({ text: text.slice(cursor), highlighted: false });
  return out;
}

export function renderSegments(parts: Segment[]): string {
  const esc = (s: string) => s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
  return parts
    .map((p) => (p.highlighted ? `<mark>${esc(p.text)}</mark>` : esc(p.text)))
    .join("");
}
