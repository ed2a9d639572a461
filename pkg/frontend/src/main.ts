// Browser entry point: wires the store to the DOM. All markup comes
// from render.ts; this file only routes events back into the store.

import { WorkbenchApi } from './api.js';
import { WorkbenchStore } from './store.js';
import { renderApp } from './render.js';

const api = new WorkbenchApi({ baseUrl: '', actor: 'workbench' });
const store = new WorkbenchStore(api);
const root = document.getElementById('app');
if (!root) throw new Error('missing #app mount point');

store.subscribe((state) => {
  root.innerHTML = renderApp(state);
});

root.addEventListener('click', (ev) => {
  const target = (ev.target as HTMLElement).closest('[data-action]');
  if (!(target instanceof HTMLElement)) return;
  const node = target.dataset.node ?? '';
  const topic = target.dataset.topic ?? '';
  switch (target.dataset.action) {
    case 'retry-search':
      void store.retrySearch();
      break;
    case 'dismiss-notice':
      store.clearNotice();
      break;
    case 'conflict-retry':
      void store.retryConflict();
      break;
    case 'conflict-dismiss':
      store.dismissConflict();
      break;
    case 'select-node':
      store.selectNode(store.state.selectedNode === node ? null : node);
      break;
    case 'attach':
      void store.attach(node, topic);
      break;
    case 'detach':
      void store.detach(node, topic);
      break;
    case 'follow-suggestion':
      void store.followSuggestion(target.dataset.query ?? '');
      break;
  }
});

root.addEventListener('submit', (ev) => {
  const form = ev.target;
  if (!(form instanceof HTMLFormElement)) return;
  ev.preventDefault();
  const data = new FormData(form);
  if (form.id === 'search-form') {
    const q = String(data.get('q') ?? '').trim();
    if (q) void store.explore(q);
  } else if (form.id === 'node-form') {
    const name = String(data.get('name') ?? '').trim();
    const parent = String(data.get('parent') ?? '');
    if (name) void store.createNode(name, parent || null);
  }
});

void store.loadTaxonomy();
