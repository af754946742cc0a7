/** Generation-job polling until the job leaves its running states. */

import { Job, WeatClient } from "./api";

export interface PollOptions {
  /** Poll period; the authoring screen uses 2 s. */
  intervalMs?: number;
  timeoutMs?: number;
  /** Called with each observed job state (drives progress display). */
  onUpdate?: (job: Job) => void;
}

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/**
 * Poll until the job is awaiting review (resolve) or failed (reject).
 * A job that reaches `complete` without passing through review also
 * resolves, so callers can poll after accepting.
 */
export async function pollJob(
  client: WeatClient,
  exampleId: string,
  options: PollOptions = {},
): Promise<Job> {
  const intervalMs = options.intervalMs ?? 2000;
  const timeoutMs = options.timeoutMs ?? 300_000;
  const startedAt = Date.now();
  for (;;) {
    const { job } = await client.getJob(exampleId);
    options.onUpdate?.(job);
    if (job.status === "awaiting_review" || job.status === "complete") {
      return job;
    }
    if (job.status === "failed") {
      throw new Error(job.error ?? "generation failed");
    }
    if (Date.now() - startedAt > timeoutMs) {
      throw new Error("timed out waiting for the generation job");
    }
    await sleep(intervalMs);
  }
}
