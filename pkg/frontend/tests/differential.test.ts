/**
 * Differential suite: every binding answer must be byte-for-byte the CLI's
 * JSON answer, including the error taxonomy, across 1,000 randomly drawn
 * fixture codes (valid, deprecated, region, composite, and mutated junk).
 */
import { describe, expect, it } from 'vitest';

import { BoundHandle, LinguographError } from '../src';
import { parseDiagnostics, runCli } from '../src/cli';

// fixture inventory: current codes of every kind, deprecated codes, region
// codes, composites, and strings that resolve to nothing
const INVENTORY = [
  'de', 'deu', 'ger', 'stan1295', 'Q188',
  'en', 'eng', 'stan1293', 'Q1860',
  'am', 'amh', 'amha1245', 'ti', 'tir', 'tigr1271',
  'kk', 'kaz', 'kaza1248', 'he', 'heb', 'hebr1245',
  'pap', 'papi1253', 'egl', 'emil1241', 'rgn', 'roma1328',
  'nor', 'no', 'nno', 'nn', 'nob', 'nb',
  'epo', 'eo', 'lat', 'la', 'ind', 'id', 'ron', 'ro', 'rum',
  'afa', 'gem', 'ine', 'trk',
  'afro1255', 'indo1319', 'germ1287', 'turk1311',
  'eml', 'mol', 'dha', 'btb', 'llo', 'iw', 'in', 'mo', 'ji',
  'deu_Latn', 'de_Latn', 'kaz_Arab', 'kk_Cyrl', 'pap_Latn',
  'xx', 'DE', 'ET', 'ETH', 'AN', 'Ethi', 'Latn',
  'zzz9', 'Q9999', 'qqqq9999', 'dog', 'multilingual',
];

const TARGET_TYPES = ['iso639_1', 'iso639_3', 'glottocode', 'wikidata_qid', 'bcp47', 'lang_script'] as const;
const FROM_TYPES = ['iso639_1', 'iso639_2b', 'iso639_3', 'glottocode', 'wikidata_qid'] as const;

/** Deterministic PRNG so the 1,000 draws are reproducible. */
function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function pick<T>(rng: () => number, items: readonly T[]): T {
  return items[Math.floor(rng() * items.length)];
}

function mutate(rng: () => number, code: string): string {
  const roll = rng();
  if (roll < 0.6 || code.length === 0) return code;
  if (roll < 0.75) {
    const i = Math.floor(rng() * code.length);
    const c = code[i];
    const flipped = c === c.toLowerCase() ? c.toUpperCase() : c.toLowerCase();
    return code.slice(0, i) + flipped + code.slice(i + 1);
  }
  if (roll < 0.9) return code + pick(rng, ['x', 'q', '1', '_']);
  return code.slice(0, Math.max(1, code.length - 1));
}

interface Trial {
  args: string[];
  viaBinding: (handle: BoundHandle) => Promise<unknown>;
  /** convert/normalize answers unwrap {"code": ...}; undo that for comparison */
  unwrap?: (payload: unknown) => unknown;
}

function makeTrial(rng: () => number, code: string): Trial {
  const op = pick(rng, ['get', 'convert', 'normalize', 'search'] as const);
  switch (op) {
    case 'get':
      return { args: ['get', code], viaBinding: (h) => h.get(code) };
    case 'convert': {
      const from = pick(rng, FROM_TYPES);
      const to = pick(rng, TARGET_TYPES);
      return {
        args: ['convert', code, '--from', from, '--to', to],
        viaBinding: (h) => h.convert(code, from, to),
        unwrap: (payload) => (payload as { code: string }).code,
      };
    }
    case 'normalize': {
      const to = pick(rng, TARGET_TYPES);
      return {
        args: ['normalize', code, '--to', to],
        viaBinding: (h) => h.normalize(code, to),
        unwrap: (payload) => (payload as { code: string }).code,
      };
    }
    case 'search':
      return { args: ['search', code, '--limit', '4'], viaBinding: (h) => h.search(code, 4) };
  }
}

async function runWithLimit<T>(tasks: (() => Promise<T>)[], limit: number): Promise<T[]> {
  const results: T[] = new Array(tasks.length);
  let next = 0;
  async function worker() {
    while (next < tasks.length) {
      const index = next++;
      results[index] = await tasks[index]();
    }
  }
  await Promise.all(Array.from({ length: Math.min(limit, tasks.length) }, worker));
  return results;
}

describe('bindings vs direct CLI JSON', () => {
  it('1,000 random fixture codes give identical outputs for get/convert/normalize/search', async () => {
    const handle = new BoundHandle({});
    const rng = mulberry32(0xc0ffee);
    const trials: Trial[] = [];
    for (let i = 0; i < 1000; i++) {
      trials.push(makeTrial(rng, mutate(rng, pick(rng, INVENTORY))));
    }

    const opsSeen = new Set(trials.map((t) => t.args[0]));
    expect(opsSeen).toEqual(new Set(['get', 'convert', 'normalize', 'search']));

    let successes = 0;
    let failures = 0;
    const tasks = trials.map((trial) => async () => {
      const direct = await runCli([...trial.args, '--format', 'json']);
      let bindingValue: unknown;
      let bindingError: unknown;
      try {
        bindingValue = await trial.viaBinding(handle);
      } catch (error) {
        bindingError = error;
      }

      if (direct.exitCode === 0) {
        successes += 1;
        expect(bindingError, `binding failed where CLI succeeded: ${trial.args.join(' ')}`).toBeUndefined();
        let expected: unknown = JSON.parse(direct.stdout);
        if (trial.unwrap) expected = trial.unwrap(expected);
        expect(bindingValue).toEqual(expected);
      } else {
        failures += 1;
        expect(bindingError, `binding succeeded where CLI failed: ${trial.args.join(' ')}`).toBeDefined();
        const { errors } = parseDiagnostics(direct.stderr);
        expect(errors.length).toBeGreaterThan(0);
        const expectedError = errors[0];
        const got = bindingError as LinguographError;
        expect(got).toBeInstanceOf(LinguographError);
        expect(got.kind).toBe(expectedError.kind);
        expect(got.message).toBe(expectedError.message);
      }
    });

    await runWithLimit(tasks, 16);
    // the draw must exercise both sides of the interface
    expect(successes).toBeGreaterThan(100);
    expect(failures).toBeGreaterThan(100);
  }, 600_000);
});
