import type { DeprecationNotice } from './types';

/** Surface a deprecation notice through Node's warning channel.
 *
 * Never throws; listeners see a warning with code LINGUOGRAPH_DEPRECATION
 * and the structured notice JSON in `detail`.
 */
export function emitDeprecationNotice(notice: DeprecationNotice): void {
  try {
    process.emitWarning(notice.message, {
      code: 'LINGUOGRAPH_DEPRECATION',
      type: 'DeprecationWarning',
      detail: JSON.stringify(notice),
    });
  } catch {
    // a broken warning listener must not break the lookup
  }
}
