/**
 * WorkbenchStore - single source of truth for the curation workbench.
 *
 * The state is nothing more than the last server responses plus a list
 * of pending (optimistic) attach/detach operations. Rendering derives
 * everything from that pair, so the UI can never drift from what the
 * service said: a badge count is the server's topic list adjusted by
 * the pending ops, never a counter we bump by hand.
 *
 * Concurrency model:
 * - every mutation sends If-Match with the version we last saw
 * - a 409 rolls the pending op back, refreshes the tree, and raises an
 *   explicit conflict prompt; the curator decides whether to retry
 * - we never last-write-win over someone else's edit
 */

import { ApiError } from './api.js';
import type {
  CreatedNode,
  MutationResult,
  SearchResult,
  Suggestion,
  SuggestionsResult,
  Taxonomy,
  TopicCard,
} from './api.js';

/** The slice of WorkbenchApi the store depends on (fakeable in tests). */
export interface ServiceClient {
  searchTopics(query: string, k?: number): Promise<SearchResult>;
  suggestions(query: string, k?: number): Promise<SuggestionsResult>;
  taxonomy(): Promise<Taxonomy>;
  createNode(name: string, parent: string | null, version: number): Promise<CreatedNode>;
  attach(nodeId: string, topicId: string, version: number): Promise<MutationResult>;
  detach(nodeId: string, topicId: string, version: number): Promise<MutationResult>;
}

export type ViewStatus =
  | { kind: 'idle' }
  | { kind: 'loading' }
  | { kind: 'ready' }
  | { kind: 'no-topics'; query: string }
  | { kind: 'service-down'; message: string }
  | { kind: 'error'; message: string };

export interface PendingOp {
  kind: 'attach' | 'detach';
  nodeId: string;
  topicId: string;
}

export interface ConflictPrompt {
  kind: 'attach' | 'detach';
  nodeId: string;
  topicId: string;
  message: string;
}

export interface WorkbenchState {
  /** Seed query whose results fill the card grid. */
  activeQuery: string | null;
  /** Cards exactly as /topics returned them, order untouched. */
  cards: TopicCard[];
  /** Snapshot the cards came from; shown on every card. */
  cardsSnapshotId: string | null;
  view: ViewStatus;
  /** Last /taxonomy (or refresh) response, version included. */
  taxonomy: Taxonomy | null;
  selectedNode: string | null;
  suggestions: Suggestion[];
  suggestionsFor: string | null;
  /** Optimistic ops awaiting server confirmation. */
  pending: PendingOp[];
  conflict: ConflictPrompt | null;
  /** Transient message (server warnings, request failures). */
  notice: string | null;
}

export type Listener = (state: WorkbenchState) => void;

function initialState(): WorkbenchState {
  return {
    activeQuery: null,
    cards: [],
    cardsSnapshotId: null,
    view: { kind: 'idle' },
    taxonomy: null,
    selectedNode: null,
    suggestions: [],
    suggestionsFor: null,
    pending: [],
    conflict: null,
    notice: null,
  };
}

// ---------------------------------------------------------------------------
// Pure derivations (render reads through these, tests pin them down)
// ---------------------------------------------------------------------------

/** Server topic list for a node adjusted by pending attach/detach ops. */
export function effectiveTopics(state: WorkbenchState, nodeId: string): string[] {
  const node = state.taxonomy?.nodes.find((n) => n.id === nodeId);
  if (!node) return [];
  const topics = [...node.topics];
  for (const op of state.pending) {
    if (op.nodeId !== nodeId) continue;
    if (op.kind === 'attach' && !topics.includes(op.topicId)) topics.push(op.topicId);
    if (op.kind === 'detach') {
      const at = topics.indexOf(op.topicId);
      if (at >= 0) topics.splice(at, 1);
    }
  }
  return topics;
}

export function badgeCount(state: WorkbenchState, nodeId: string): number {
  return effectiveTopics(state, nodeId).length;
}

export function isAttached(state: WorkbenchState, nodeId: string, topicId: string): boolean {
  return effectiveTopics(state, nodeId).includes(topicId);
}

/** Nodes a topic hangs under, including optimistic attachments. */
export function attachmentsFor(
  state: WorkbenchState,
  topicId: string
): { nodeId: string; name: string }[] {
  if (!state.taxonomy) return [];
  return state.taxonomy.nodes
    .filter((n) => isAttached(state, n.id, topicId))
    .map((n) => ({ nodeId: n.id, name: n.name }));
}

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

export class WorkbenchStore {
  private readonly api: ServiceClient;
  private listeners: Listener[] = [];
  private searchEpoch = 0;
  state: WorkbenchState;

  constructor(api: ServiceClient) {
    this.api = api;
    this.state = initialState();
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private patch(changes: Partial<WorkbenchState>): void {
    this.state = { ...this.state, ...changes };
    this.notify();
  }

  clearNotice(): void {
    this.patch({ notice: null });
  }

  // -- search_view ----------------------------------------------------------

  async search(query: string): Promise<void> {
    const epoch = ++this.searchEpoch;
    this.patch({ activeQuery: query, view: { kind: 'loading' } });
    try {
      const result = await this.api.searchTopics(query);
      if (epoch !== this.searchEpoch) return; // a newer search superseded us
      this.patch({
        cards: result.topics,
        cardsSnapshotId: result.snapshot_id,
        view: { kind: 'ready' },
      });
    } catch (err) {
      if (epoch !== this.searchEpoch) return;
      this.patch({ cards: [], cardsSnapshotId: null, view: viewFor(err, query) });
    }
  }

  /** Retry the active search after a service-down banner. */
  async retrySearch(): Promise<void> {
    if (this.state.activeQuery !== null) await this.search(this.state.activeQuery);
  }

  // -- explore_suggestions --------------------------------------------------

  async loadSuggestions(query: string): Promise<void> {
    try {
      const result = await this.api.suggestions(query);
      this.patch({ suggestions: result.suggestions, suggestionsFor: query });
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.patch({ suggestions: [], suggestionsFor: query });
        return;
      }
      this.patch({ suggestions: [], suggestionsFor: query, notice: messageOf(err) });
    }
  }

  /** Search box submit: cards and the suggestion panel for the seed. */
  async explore(query: string): Promise<void> {
    await Promise.all([this.search(query), this.loadSuggestions(query)]);
  }

  /** Clicking a suggestion re-runs the search view for that query. */
  async followSuggestion(query: string): Promise<void> {
    await this.search(query);
  }

  // -- taxonomy -------------------------------------------------------------

  async loadTaxonomy(): Promise<void> {
    try {
      const tree = await this.api.taxonomy();
      this.patch({ taxonomy: tree });
    } catch (err) {
      this.patch({ notice: messageOf(err) });
    }
  }

  selectNode(nodeId: string | null): void {
    this.patch({ selectedNode: nodeId });
  }

  async createNode(name: string, parent: string | null): Promise<void> {
    const version = this.state.taxonomy?.version;
    if (version === undefined) {
      this.patch({ notice: 'taxonomy not loaded yet' });
      return;
    }
    try {
      const created = await this.api.createNode(name, parent, version);
      await this.loadTaxonomy();
      this.patch({ selectedNode: created.node.id });
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        await this.loadTaxonomy();
        this.patch({ notice: 'taxonomy changed underneath you, tree refreshed; try again' });
        return;
      }
      this.patch({ notice: messageOf(err) });
    }
  }

  // -- attach_flow ----------------------------------------------------------

  async attach(nodeId: string, topicId: string): Promise<void> {
    await this.mutate('attach', nodeId, topicId);
  }

  async detach(nodeId: string, topicId: string): Promise<void> {
    await this.mutate('detach', nodeId, topicId);
  }

  private async mutate(kind: 'attach' | 'detach', nodeId: string, topicId: string): Promise<void> {
    const version = this.state.taxonomy?.version;
    if (version === undefined) {
      this.patch({ notice: 'taxonomy not loaded yet' });
      return;
    }
    const op: PendingOp = { kind, nodeId, topicId };
    this.patch({ pending: [...this.state.pending, op], conflict: null });
    try {
      const result =
        kind === 'attach'
          ? await this.api.attach(nodeId, topicId, version)
          : await this.api.detach(nodeId, topicId, version);
      await this.loadTaxonomy();
      this.patch({
        pending: this.state.pending.filter((p) => p !== op),
        notice: result.warning,
      });
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // someone moved the tree first: roll back, show them the truth,
        // and let the curator decide whether the op still makes sense
        await this.loadTaxonomy();
        this.patch({
          pending: this.state.pending.filter((p) => p !== op),
          conflict: { kind, nodeId, topicId, message: messageOf(err) },
        });
        return;
      }
      this.patch({
        pending: this.state.pending.filter((p) => p !== op),
        notice: messageOf(err),
      });
    }
  }

  /** Re-run the conflicted op against the refreshed tree. */
  async retryConflict(): Promise<void> {
    const prompt = this.state.conflict;
    if (!prompt) return;
    this.patch({ conflict: null });
    await this.mutate(prompt.kind, prompt.nodeId, prompt.topicId);
  }

  dismissConflict(): void {
    this.patch({ conflict: null });
  }
}

function viewFor(err: unknown, query: string): ViewStatus {
  if (err instanceof ApiError) {
    if (err.status === 404) return { kind: 'no-topics', query };
    if (err.status === 503 || err.status === 0) {
      return { kind: 'service-down', message: messageOf(err) };
    }
    return { kind: 'error', message: messageOf(err) };
  }
  return { kind: 'error', message: messageOf(err) };
}

function messageOf(err: unknown): string {
  if (err instanceof ApiError) {
    if (typeof err.detail === 'string') return err.detail;
    if (
      typeof err.detail === 'object' &&
      err.detail !== null &&
      'message' in err.detail &&
      typeof (err.detail as { message: unknown }).message === 'string'
    ) {
      return (err.detail as { message: string }).message;
    }
    return err.message;
  }
  return err instanceof Error ? err.message : String(err);
}
