import { gunzipSync } from 'node:zlib';
import { readFileSync, existsSync } from 'node:fs';

import { CliProcessError, NamesUnavailableError, errorFromPayload } from './errors';
import { parseDiagnostics, runCli } from './cli';
import { emitDeprecationNotice } from './notices';
import type { IdentifierType, NodeSummary, Relation, SearchHit } from './types';

export interface HandleOptions {
  /** Database file; when omitted the CLI falls back to $LINGUOGRAPH_DB or its bundled database. */
  databasePath?: string;
  /** Names file; defaults to the database path with the .lgnames.gz suffix. */
  namesPath?: string;
  /** Override the CLI command (see cliCommand). */
  command?: string[];
}

type NamesRow = [subject: string, inLanguage: string, name: string, isEndonym: boolean, source: string];

/** A read-only view of one database, marshalled through the CLI.
 *
 * No logic lives here beyond argument marshalling and error mapping: every
 * answer is exactly what the CLI's JSON interface returns. The names table
 * is read lazily from the companion file on first use.
 */
export class BoundHandle {
  private namesRows: NamesRow[] | null = null;
  /** How many times the names file has been decompressed (laziness contract). */
  namesLoadCount = 0;

  constructor(readonly options: HandleOptions = {}) {}

  private baseArgs(): string[] {
    const args = ['--format', 'json'];
    if (this.options.databasePath) args.push('--database', this.options.databasePath);
    if (this.options.namesPath) args.push('--names', this.options.namesPath);
    return args;
  }

  private async invoke(args: string[]): Promise<unknown> {
    const result = await runCli([...args, ...this.baseArgs()], this.options.command);
    const { notices, errors } = parseDiagnostics(result.stderr);
    for (const notice of notices) emitDeprecationNotice(notice);
    if (result.exitCode === 0) {
      return result.stdout.trim() ? JSON.parse(result.stdout) : null;
    }
    if (errors.length > 0) {
      throw errorFromPayload(errors[0], result.exitCode, result.stderr);
    }
    throw new CliProcessError(
      `CLI exited with code ${result.exitCode}`,
      result.exitCode,
      result.stderr,
    );
  }

  /** Resolve any languoid code to its canonical entity. */
  async get(code: string): Promise<NodeSummary> {
    return (await this.invoke(['get', code])) as NodeSummary;
  }

  async getScript(code: string): Promise<NodeSummary> {
    return (await this.invoke(['get', code, '--kind', 'script'])) as NodeSummary;
  }

  async getRegion(code: string): Promise<NodeSummary> {
    return (await this.invoke(['get', code, '--kind', 'region'])) as NodeSummary;
  }

  /** Typed conversion; the code must belong to `from` specifically. */
  async convert(code: string, from: IdentifierType, to: IdentifierType): Promise<string> {
    const payload = (await this.invoke(['convert', code, '--from', from, '--to', to])) as { code: string };
    return payload.code;
  }

  /** Resolve any code to the canonical languoid, then project `to`. */
  async normalize(code: string, to: IdentifierType): Promise<string> {
    const payload = (await this.invoke(['normalize', code, '--to', to])) as { code: string };
    return payload.code;
  }

  /** Name/endonym search; ranked exact > prefix > substring. */
  async search(query: string, limit = 10): Promise<SearchHit[]> {
    return (await this.invoke(['search', query, '--limit', String(limit)])) as SearchHit[];
  }

  /** Graph traversal from a languoid. */
  async neighbors(code: string, relation: Relation): Promise<NodeSummary[]> {
    return (await this.invoke(['neighbors', code, '--relation', relation])) as NodeSummary[];
  }

  private namesFilePath(): string {
    if (this.options.namesPath) return this.options.namesPath;
    const db = this.options.databasePath;
    if (db && db.endsWith('.lgdb.gz')) return db.slice(0, -'.lgdb.gz'.length) + '.lgnames.gz';
    throw new NamesUnavailableError(
      'names lookups need namesPath (or a databasePath ending in .lgdb.gz) on the handle',
    );
  }

  private loadNames(): NamesRow[] {
    if (this.namesRows === null) {
      const path = this.namesFilePath();
      if (!existsSync(path)) {
        throw new NamesUnavailableError(`names file not found: ${path}`);
      }
      const document = JSON.parse(gunzipSync(readFileSync(path)).toString('utf8')) as { rows: NamesRow[] };
      this.namesRows = document.rows;
      this.namesLoadCount += 1;
    }
    return this.namesRows;
  }

  /** Names of `subject` in the language `inLanguage` resolves to. */
  async nameOf(subject: string, inLanguage: string): Promise<string[]> {
    const path = this.namesFilePath(); // fail before spawning anything
    void path;
    const [subjectNode, languageNode] = await Promise.all([this.get(subject), this.get(inLanguage)]);
    const rows = this.loadNames();
    const seen = new Set<string>();
    const names: string[] = [];
    for (const [rowSubject, rowLanguage, name] of rows) {
      if (rowSubject === subjectNode.internal_id && rowLanguage === languageNode.internal_id && !seen.has(name)) {
        seen.add(name);
        names.push(name);
      }
    }
    return names;
  }
}

/** Open a handle and verify the database actually loads. */
export async function load(databasePath?: string, options: Omit<HandleOptions, 'databasePath'> = {}): Promise<BoundHandle> {
  const handle = new BoundHandle({ ...options, databasePath });
  await handle.search('zzqx', 1); // cheap probe: exercises load + validation
  return handle;
}
