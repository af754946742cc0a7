/** Review-panel state: staged rounds -> per-line decisions -> accept payload. */

import { Job, LineSelectionPayload } from "./api";

export interface StagedText {
  round: number;
  /** Text as generated. */
  original: string;
  /** Author's replacement, when edited in review. */
  edited: string | null;
}

export interface ReviewLine {
  line: number;
  include: boolean;
  texts: StagedText[];
}

/** Flatten the staged rounds into one entry per explained line. */
export function reviewLinesFromJob(job: Job): ReviewLine[] {
  const byLine = new Map<number, StagedText[]>();
  for (const round of job.staged_rounds) {
    for (const [key, text] of Object.entries(round.by_line)) {
      const line = Number(key);
      if (!byLine.has(line)) {
        byLine.set(line, []);
      }
      byLine.get(line)!.push({ round: round.round, original: text, edited: null });
    }
  }
  return [...byLine.entries()]
    .sort(([a], [b]) => a - b)
    .map(([line, texts]) => ({
      line,
      include: true,
      texts: texts.sort((a, b) => a.round - b.round),
    }));
}

export function setInclude(lines: ReviewLine[], line: number, include: boolean): ReviewLine[] {
  return lines.map((entry) => (entry.line === line ? { ...entry, include } : entry));
}

export function setEditedText(
  lines: ReviewLine[],
  line: number,
  round: number,
  text: string,
): ReviewLine[] {
  return lines.map((entry) => {
    if (entry.line !== line) {
      return entry;
    }
    return {
      ...entry,
      texts: entry.texts.map((staged) =>
        staged.round === round
          ? { ...staged, edited: text === staged.original ? null : text }
          : staged,
      ),
    };
  });
}

/**
 * Build the accept-request selections, listing only lines that deviate from
 * the default (include everything, unedited). Returns null when nothing
 * deviates, which accepts everything as staged.
 */
export function acceptSelections(
  lines: ReviewLine[],
): Record<string, LineSelectionPayload> | null {
  const selections: Record<string, LineSelectionPayload> = {};
  for (const entry of lines) {
    const payload: LineSelectionPayload = {};
    if (!entry.include) {
      payload.include = false;
    }
    const edits: Record<string, string> = {};
    for (const staged of entry.texts) {
      if (staged.edited !== null) {
        edits[String(staged.round)] = staged.edited;
      }
    }
    if (entry.include && Object.keys(edits).length > 0) {
      payload.edits = edits;
    }
    if (Object.keys(payload).length > 0) {
      selections[String(entry.line)] = payload;
    }
  }
  return Object.keys(selections).length > 0 ? selections : null;
}
