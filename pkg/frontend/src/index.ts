export { BoundHandle, load } from './handle';
export type { HandleOptions } from './handle';
export { cliCommand, runCli, parseDiagnostics } from './cli';
export { emitDeprecationNotice } from './notices';
export {
  AmbiguousCodeError,
  CliProcessError,
  LinguographError,
  MissingTargetError,
  NamesUnavailableError,
  NotFoundError,
  TypeMismatchError,
  errorFromPayload,
} from './errors';
export type { ErrorKind, ErrorPayload } from './errors';
export type { DeprecationNotice, IdentifierType, NodeSummary, Relation, SearchHit } from './types';
