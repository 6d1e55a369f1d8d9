import { execFile } from 'node:child_process';

import type { DeprecationNotice } from './types';
import type { ErrorPayload } from './errors';

export interface CliResult {
  exitCode: number;
  stdout: string;
  stderr: string;
}

/** The command used to reach the toolkit CLI.
 *
 * Defaults to `linguograph` on PATH; override with LINGUOGRAPH_CLI
 * (whitespace-separated, e.g. "python3 -m linguograph.cli").
 */
export function cliCommand(): string[] {
  const fromEnv = process.env.LINGUOGRAPH_CLI;
  if (fromEnv && fromEnv.trim()) {
    return fromEnv.trim().split(/\s+/);
  }
  return ['linguograph'];
}

/** Run one CLI invocation. Non-zero exit codes resolve normally (the caller
 * inspects them); only a spawn failure rejects. */
export function runCli(args: string[], command?: string[]): Promise<CliResult> {
  const [executable, ...prefix] = command ?? cliCommand();
  return new Promise((resolve, reject) => {
    execFile(
      executable,
      [...prefix, ...args],
      { encoding: 'utf8', maxBuffer: 64 * 1024 * 1024 },
      (error, stdout, stderr) => {
        if (error && typeof (error as NodeJS.ErrnoException).code === 'string') {
          // ENOENT and friends: the CLI itself could not be started
          reject(new Error(`failed to run ${executable}: ${(error as Error).message}`));
          return;
        }
        const exitCode = error && typeof error.code === 'number' ? error.code : 0;
        resolve({ exitCode, stdout, stderr });
      },
    );
  });
}

export interface Diagnostics {
  notices: DeprecationNotice[];
  errors: ErrorPayload[];
}

/** stderr carries one JSON object per line when a machine format is active:
 * {"notice": {...}} for deprecation warnings, {"error": {...}} on failure. */
export function parseDiagnostics(stderr: string): Diagnostics {
  const notices: DeprecationNotice[] = [];
  const errors: ErrorPayload[] = [];
  for (const line of stderr.split('\n')) {
    const trimmed = line.trim();
    if (!trimmed.startsWith('{')) continue;
    let parsed: unknown;
    try {
      parsed = JSON.parse(trimmed);
    } catch {
      continue;
    }
    if (typeof parsed !== 'object' || parsed === null) continue;
    const record = parsed as Record<string, unknown>;
    if (record.notice) notices.push(record.notice as DeprecationNotice);
    if (record.error) errors.push(record.error as ErrorPayload);
  }
  return { notices, errors };
}
