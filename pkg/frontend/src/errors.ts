import type { NodeSummary } from './types';

/** Error kinds emitted by the CLI's JSON diagnostic stream. */
export type ErrorKind =
  | 'not_found'
  | 'ambiguous'
  | 'type_mismatch'
  | 'missing_target'
  | 'names_unavailable'
  | string;

export class LinguographError extends Error {
  constructor(message: string, readonly kind: ErrorKind) {
    super(message);
    this.name = new.target.name;
  }
}

/** A code or name resolved to nothing in the database. */
export class NotFoundError extends LinguographError {
  constructor(message: string, readonly hint?: string) {
    super(message, 'not_found');
  }
}

/** A deprecated code was split; the successors are listed. */
export class AmbiguousCodeError extends LinguographError {
  constructor(message: string, readonly candidates: NodeSummary[]) {
    super(message, 'ambiguous');
  }
}

/** The code exists, but not under the identifier type named by the caller. */
export class TypeMismatchError extends LinguographError {
  constructor(message: string) {
    super(message, 'type_mismatch');
  }
}

/** The resolved entity has no code of the requested target type. */
export class MissingTargetError extends LinguographError {
  constructor(message: string) {
    super(message, 'missing_target');
  }
}

/** Name lookups need a names file that is not available. */
export class NamesUnavailableError extends LinguographError {
  constructor(message: string) {
    super(message, 'names_unavailable');
  }
}

/** The CLI failed outside the lookup-error taxonomy (usage, build, I/O). */
export class CliProcessError extends LinguographError {
  constructor(
    message: string,
    readonly exitCode: number,
    readonly stderr: string,
    kind: ErrorKind = 'process',
  ) {
    super(message, kind);
  }
}

export interface ErrorPayload {
  kind: ErrorKind;
  message: string;
  candidates?: NodeSummary[];
  hint?: string;
  [extra: string]: unknown;
}

/** Map a CLI error payload onto the matching exception class. */
export function errorFromPayload(payload: ErrorPayload, exitCode: number, stderr: string): LinguographError {
  switch (payload.kind) {
    case 'not_found':
      return new NotFoundError(payload.message, payload.hint);
    case 'ambiguous':
      return new AmbiguousCodeError(payload.message, payload.candidates ?? []);
    case 'type_mismatch':
      return new TypeMismatchError(payload.message);
    case 'missing_target':
      return new MissingTargetError(payload.message);
    case 'names_unavailable':
      return new NamesUnavailableError(payload.message);
    default:
      return new CliProcessError(payload.message, exitCode, stderr, payload.kind);
  }
}
