/**
 * WorkbenchApi tests: request shapes, headers, and error mapping,
 * all against a recorded stub fetch.
 */

import { describe, expect, it } from 'vitest';
import { ApiError, WorkbenchApi } from '../src/api.js';
import type { SearchResult } from '../src/api.js';

interface RecordedCall {
  url: string;
  method: string;
  headers: Headers;
  body: string | null;
}

function stubFetch(respond: (call: RecordedCall) => Response) {
  const calls: RecordedCall[] = [];
  const fn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const call: RecordedCall = {
      url: String(input),
      method: init?.method ?? 'GET',
      headers: new Headers(init?.headers),
      body: typeof init?.body === 'string' ? init.body : null,
    };
    calls.push(call);
    return respond(call);
  }) as typeof fetch;
  return { fn, calls };
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'content-type': 'application/json' },
  });
}

const EMPTY_SEARCH: SearchResult = {
  snapshot_id: 'abc123def456',
  query: 'oak table',
  total: 0,
  topics: [],
};

describe('WorkbenchApi', () => {
  it('encodes the search query and parses the result', async () => {
    const { fn, calls } = stubFetch(() => json(200, EMPTY_SEARCH));
    const api = new WorkbenchApi({ fetchFn: fn });

    const result = await api.searchTopics('oak & ash', 7);

    expect(calls[0].url).toBe('/topics?query=oak+%26+ash&k=7');
    expect(calls[0].method).toBe('GET');
    expect(result.snapshot_id).toBe('abc123def456');
  });

  it('prefixes requests with the base url', async () => {
    const { fn, calls } = stubFetch(() => json(200, EMPTY_SEARCH));
    const api = new WorkbenchApi({ baseUrl: 'http://svc:8571', fetchFn: fn });

    await api.searchTopics('oak');

    expect(calls[0].url).toBe('http://svc:8571/topics?query=oak&k=20');
  });

  it('raises ApiError with the server detail on 404', async () => {
    const { fn } = stubFetch(() => json(404, { detail: 'unknown query: zzz' }));
    const api = new WorkbenchApi({ fetchFn: fn });

    const err = await api.searchTopics('zzz').catch((e) => e);

    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(404);
    expect(err.detail).toBe('unknown query: zzz');
    expect(err.message).toBe('unknown query: zzz');
  });

  it('keeps the status text when the error body is not JSON', async () => {
    const { fn } = stubFetch(
      () => new Response('<html>boom</html>', { status: 502, statusText: 'Bad Gateway' })
    );
    const api = new WorkbenchApi({ fetchFn: fn });

    const err = await api.health().catch((e) => e);

    expect(err.status).toBe(502);
    expect(err.detail).toBe('Bad Gateway');
  });

  it('maps a rejected fetch to status 0', async () => {
    const fn = (async () => {
      throw new TypeError('fetch failed');
    }) as unknown as typeof fetch;
    const api = new WorkbenchApi({ fetchFn: fn });

    const err = await api.taxonomy().catch((e) => e);

    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(0);
    expect(String(err.detail)).toContain('fetch failed');
  });

  it('attach posts the topic id with If-Match and x-actor headers', async () => {
    const { fn, calls } = stubFetch(() =>
      json(200, { snapshot_id: 'abc123def456', version: 4, changed: true, warning: null })
    );
    const api = new WorkbenchApi({ fetchFn: fn, actor: 'casey' });

    const result = await api.attach('n-1', 't-9', 3);

    expect(calls[0].url).toBe('/taxonomy/nodes/n-1/topics');
    expect(calls[0].method).toBe('POST');
    expect(calls[0].headers.get('if-match')).toBe('3');
    expect(calls[0].headers.get('x-actor')).toBe('casey');
    expect(calls[0].headers.get('content-type')).toBe('application/json');
    expect(JSON.parse(calls[0].body ?? '')).toEqual({ topic_id: 't-9' });
    expect(result.version).toBe(4);
  });

  it('exposes the server version from a 409 body', async () => {
    const { fn } = stubFetch(() =>
      json(409, { detail: { message: 'taxonomy version conflict', current_version: 8 } })
    );
    const api = new WorkbenchApi({ fetchFn: fn });

    const err: ApiError = await api.attach('n-1', 't-9', 3).catch((e) => e);

    expect(err.status).toBe(409);
    expect(err.conflictVersion).toBe(8);
  });

  it('conflictVersion is null for other failures', async () => {
    const { fn } = stubFetch(() => json(404, { detail: 'unknown node: n-9' }));
    const api = new WorkbenchApi({ fetchFn: fn });

    const err: ApiError = await api.attach('n-9', 't-1', 3).catch((e) => e);

    expect(err.conflictVersion).toBeNull();
  });

  it('detach issues DELETE against the encoded pair path', async () => {
    const { fn, calls } = stubFetch(() =>
      json(200, { snapshot_id: 'abc123def456', version: 5, changed: true, warning: null })
    );
    const api = new WorkbenchApi({ fetchFn: fn });

    await api.detach('n 1', 't/2', 4);

    expect(calls[0].url).toBe('/taxonomy/nodes/n%201/topics/t%2F2');
    expect(calls[0].method).toBe('DELETE');
    expect(calls[0].headers.get('if-match')).toBe('4');
  });

  it('createNode posts name and parent', async () => {
    const { fn, calls } = stubFetch(() =>
      json(201, {
        snapshot_id: 'abc123def456',
        version: 2,
        node: { id: 'n-2', name: 'wood', parent: null, topics: [] },
      })
    );
    const api = new WorkbenchApi({ fetchFn: fn });

    const created = await api.createNode('wood', null, 1);

    expect(JSON.parse(calls[0].body ?? '')).toEqual({ name: 'wood', parent: null });
    expect(created.node.id).toBe('n-2');
  });

  it('plain reads send no If-Match or body headers', async () => {
    const { fn, calls } = stubFetch(() =>
      json(200, { snapshot_id: 'abc123def456', version: 1, nodes: [] })
    );
    const api = new WorkbenchApi({ fetchFn: fn });

    await api.taxonomy();

    expect(calls[0].headers.get('if-match')).toBeNull();
    expect(calls[0].headers.get('content-type')).toBeNull();
    expect(calls[0].headers.get('accept')).toBe('application/json');
  });
});
