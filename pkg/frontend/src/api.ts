/**
 * Typed client for the topicforge service JSON API.
 *
 * Every shape here mirrors a server response field for field; the
 * workbench never invents numbers of its own. Mutations carry the
 * taxonomy version in an If-Match header so a stale tab gets a 409
 * instead of silently clobbering someone else's curation.
 */

export interface TopicQueryStat {
  query: string;
  popularity: number;
}

export interface TopicPinStat {
  pin: string;
  score: number;
  description: string;
  image_url: string | null;
}

export interface AttachedNode {
  node_id: string;
  name: string;
}

export interface TopicCard {
  topic_id: string;
  label: string;
  score: number | null;
  size: number;
  density: number;
  ngrams: string[];
  ngram_count: number;
  top_queries: TopicQueryStat[];
  top_pins: TopicPinStat[];
  attached_to: AttachedNode[];
}

export interface SearchResult {
  snapshot_id: string;
  query: string;
  total: number;
  topics: TopicCard[];
}

export interface TopicDetail extends TopicCard {
  egos: string[];
  snapshot_id: string;
  materialization: Record<string, unknown>;
}

export interface Suggestion {
  query: string;
  popularity: number;
  novel_topic_ids: string[];
}

export interface SuggestionsResult {
  snapshot_id: string;
  query: string;
  suggestions: Suggestion[];
}

export interface TaxonomyNode {
  id: string;
  name: string;
  parent: string | null;
  topics: string[];
}

export interface Taxonomy {
  snapshot_id: string;
  version: number;
  nodes: TaxonomyNode[];
}

export interface MutationResult {
  snapshot_id: string;
  version: number;
  changed: boolean;
  warning: string | null;
}

export interface CreatedNode {
  snapshot_id: string;
  version: number;
  node: TaxonomyNode;
}

export interface Health {
  status: string;
  snapshot_id: string | null;
  taxonomy_version: number | null;
}

/**
 * Error raised for any non-2xx response. `status` is the HTTP code
 * (0 when the service was unreachable) and `detail` is whatever the
 * server put in its error body.
 */
export class ApiError extends Error {
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, detail: unknown) {
    super(typeof detail === 'string' ? detail : `request failed with status ${status}`);
    this.name = 'ApiError';
    this.status = status;
    this.detail = detail;
  }

  /** Version the server reported in a 409 conflict body, if any. */
  get conflictVersion(): number | null {
    if (
      this.status === 409 &&
      typeof this.detail === 'object' &&
      this.detail !== null &&
      'current_version' in this.detail
    ) {
      const v = (this.detail as { current_version: unknown }).current_version;
      if (typeof v === 'number') return v;
    }
    return null;
  }
}

export interface ApiOptions {
  /** Origin-relative prefix, '' when served from the same origin. */
  baseUrl?: string;
  /** Name recorded in the server's audit log via x-actor. */
  actor?: string;
  /** Injectable for tests; defaults to the global fetch. */
  fetchFn?: typeof fetch;
}

export class WorkbenchApi {
  private readonly baseUrl: string;
  private readonly actor: string | null;
  private readonly fetchFn: typeof fetch;

  constructor(options: ApiOptions = {}) {
    this.baseUrl = options.baseUrl ?? '';
    this.actor = options.actor ?? null;
    this.fetchFn = options.fetchFn ?? fetch;
  }

  private async request<T>(
    path: string,
    init: RequestInit = {},
    version?: number
  ): Promise<T> {
    const headers = new Headers(init.headers);
    headers.set('accept', 'application/json');
    if (init.body !== undefined) headers.set('content-type', 'application/json');
    if (version !== undefined) headers.set('if-match', String(version));
    if (this.actor !== null) headers.set('x-actor', this.actor);

    let res: Response;
    try {
      res = await this.fetchFn(this.baseUrl + path, { ...init, headers });
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    if (!res.ok) {
      let detail: unknown = res.statusText;
      try {
        const body = (await res.json()) as { detail?: unknown };
        if (body && body.detail !== undefined) detail = body.detail;
      } catch {
        // non-JSON error body, keep the status text
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  health(): Promise<Health> {
    return this.request<Health>('/health');
  }

  searchTopics(query: string, k = 20): Promise<SearchResult> {
    const qs = new URLSearchParams({ query, k: String(k) });
    return this.request<SearchResult>(`/topics?${qs}`);
  }

  topicDetail(topicId: string): Promise<TopicDetail> {
    return this.request<TopicDetail>(`/topics/${encodeURIComponent(topicId)}`);
  }

  suggestions(query: string, k = 20): Promise<SuggestionsResult> {
    const qs = new URLSearchParams({ query, k: String(k) });
    return this.request<SuggestionsResult>(`/suggestions?${qs}`);
  }

  taxonomy(): Promise<Taxonomy> {
    return this.request<Taxonomy>('/taxonomy');
  }

  createNode(name: string, parent: string | null, version: number): Promise<CreatedNode> {
    return this.request<CreatedNode>(
      '/taxonomy/nodes',
      { method: 'POST', body: JSON.stringify({ name, parent }) },
      version
    );
  }

  attach(nodeId: string, topicId: string, version: number): Promise<MutationResult> {
    return this.request<MutationResult>(
      `/taxonomy/nodes/${encodeURIComponent(nodeId)}/topics`,
      { method: 'POST', body: JSON.stringify({ topic_id: topicId }) },
      version
    );
  }

  detach(nodeId: string, topicId: string, version: number): Promise<MutationResult> {
    return this.request<MutationResult>(
      `/taxonomy/nodes/${encodeURIComponent(nodeId)}/topics/${encodeURIComponent(topicId)}`,
      { method: 'DELETE' },
      version
    );
  }
}
