/** The nine languoid identifier standards plus script and region standards,
 * exactly as the CLI spells them. */
export type IdentifierType =
  | 'iso639_1'
  | 'iso639_2b'
  | 'iso639_2t'
  | 'iso639_3'
  | 'iso639_5'
  | 'glottocode'
  | 'wikidata_qid'
  | 'bcp47'
  | 'lang_script'
  | 'iso15924'
  | 'iso3166_1_alpha2'
  | 'iso3166_1_alpha3'
  | 'iso3166_2'
  | 'iso3166_3';

export type Relation =
  | 'parents'
  | 'ancestors'
  | 'children'
  | 'family_root'
  | 'scripts'
  | 'regions'
  | 'co_script_languoids'
  | 'co_region_languoids';

/** One node as serialized by the CLI (`kind` discriminates the shape). */
export interface NodeSummary {
  kind: 'languoid' | 'script' | 'region';
  internal_id: string;
  name: string;
  codes: Partial<Record<IdentifierType, string>>;
  level?: string;
  flags?: string[];
  endonyms?: string[];
  speaker_count?: number;
  region_kind?: string;
  historical?: boolean;
  aliases?: string[];
}

export interface SearchHit extends NodeSummary {
  score: number;
}

export interface DeprecationNotice {
  code: string;
  id_type: string;
  message: string;
  replacements: string[];
  year: number | null;
}
