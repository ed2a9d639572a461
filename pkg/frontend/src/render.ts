/**
 * HTML renderers for the workbench. Every function is a pure map from
 * WorkbenchState to a string; there is no hidden state and no number
 * that did not arrive in a server payload (lengths of server lists and
 * pending-adjusted badge counts are the only arithmetic).
 */

import type { Suggestion, TopicCard, TopicPinStat } from './api.js';
import type { WorkbenchState } from './store.js';
import { attachmentsFor, badgeCount, isAttached } from './store.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

function attr(text: string): string {
  return escapeHtml(text);
}

export function renderApp(state: WorkbenchState): string {
  return `
<header class="topbar">
  <h1>Topic Workbench</h1>
  ${renderHealthLine(state)}
</header>
${renderNotice(state)}
${renderConflict(state)}
<main class="layout">
  <section class="results-pane">
    ${renderSearchForm(state)}
    ${renderResults(state)}
  </section>
  <aside class="side-pane">
    ${renderTaxonomy(state)}
    ${renderSuggestions(state)}
  </aside>
</main>`;
}

function renderHealthLine(state: WorkbenchState): string {
  const snapshot = state.cardsSnapshotId ?? state.taxonomy?.snapshot_id;
  const version = state.taxonomy?.version;
  const parts: string[] = [];
  if (snapshot) parts.push(`snapshot <code>${escapeHtml(snapshot)}</code>`);
  if (version !== undefined) parts.push(`taxonomy v${version}`);
  return `<div class="health">${parts.join(' &middot; ') || 'connecting'}</div>`;
}

function renderNotice(state: WorkbenchState): string {
  if (!state.notice) return '';
  return `
<div class="banner notice">
  <span>${escapeHtml(state.notice)}</span>
  <button data-action="dismiss-notice">dismiss</button>
</div>`;
}

function renderConflict(state: WorkbenchState): string {
  if (!state.conflict) return '';
  const c = state.conflict;
  return `
<div class="banner conflict">
  <span>
    ${escapeHtml(c.message)}: the tree was refreshed.
    Retry the ${c.kind} of <code>${escapeHtml(c.topicId)}</code>?
  </span>
  <button data-action="conflict-retry">refresh and retry</button>
  <button data-action="conflict-dismiss">dismiss</button>
</div>`;
}

function renderSearchForm(state: WorkbenchState): string {
  const value = state.activeQuery ? ` value="${attr(state.activeQuery)}"` : '';
  return `
<form id="search-form" class="search" autocomplete="off">
  <input name="q" placeholder="seed query, e.g. nautical decor"${value}>
  <button type="submit">search</button>
</form>`;
}

// -- results ----------------------------------------------------------------

function renderResults(state: WorkbenchState): string {
  switch (state.view.kind) {
    case 'idle':
      return '<p class="hint">Search for a query to browse its topics.</p>';
    case 'loading':
      return '<p class="hint">Loading&hellip;</p>';
    case 'no-topics':
      return `<p class="empty-state">No topics found for <b>${escapeHtml(
        state.view.query
      )}</b>. Try a broader query.</p>`;
    case 'service-down':
      return `
<div class="banner down">
  <span>Service unavailable: ${escapeHtml(state.view.message)}</span>
  <button data-action="retry-search">retry</button>
</div>`;
    case 'error':
      return `<p class="empty-state">Request failed: ${escapeHtml(state.view.message)}</p>`;
    case 'ready':
      return `<div class="cards">${state.cards
        .map((card) => renderCard(card, state))
        .join('')}</div>`;
  }
}

export function renderCard(card: TopicCard, state: WorkbenchState): string {
  const selected = state.selectedNode;
  const chips = attachmentsFor(state, card.topic_id)
    .map(
      (a) => `
      <span class="chip">
        ${escapeHtml(a.name)}
        <button data-action="detach" data-node="${attr(a.nodeId)}" data-topic="${attr(
          card.topic_id
        )}" title="detach">&times;</button>
      </span>`
    )
    .join('');
  const attachButton =
    selected && !isAttached(state, selected, card.topic_id)
      ? `<button data-action="attach" data-node="${attr(selected)}" data-topic="${attr(
          card.topic_id
        )}">attach to selected node</button>`
      : '';
  const score = card.score === null ? '' : `<span class="stat">score ${card.score}</span>`;
  return `
<article class="card" data-topic="${attr(card.topic_id)}">
  <h2>${escapeHtml(card.label)}</h2>
  <div class="stats">
    ${score}
    <span class="stat">${card.ngram_count} grams</span>
    <span class="stat">density ${card.density.toFixed(2)}</span>
  </div>
  <ul class="queries">
    ${card.top_queries
      .map(
        (q) =>
          `<li>${escapeHtml(q.query)} <span class="pop">${q.popularity}</span></li>`
      )
      .join('')}
  </ul>
  <div class="pins">${card.top_pins.map(renderPin).join('')}</div>
  <div class="attachments">${chips}${attachButton}</div>
  <footer class="snapshot">snapshot ${escapeHtml(state.cardsSnapshotId ?? '?')}</footer>
</article>`;
}

function renderPin(pin: TopicPinStat): string {
  // image hosting is not our problem: render the url when the feed had
  // one, otherwise a neutral placeholder box
  const thumb = pin.image_url
    ? `<img class="pin-thumb" src="${attr(pin.image_url)}" alt="">`
    : '<div class="pin-thumb placeholder"></div>';
  return `
<figure class="pin" title="${attr(pin.description)}">
  ${thumb}
  <figcaption>${escapeHtml(pin.description)} <span class="pop">${pin.score}</span></figcaption>
</figure>`;
}

// -- taxonomy ---------------------------------------------------------------

function renderTaxonomy(state: WorkbenchState): string {
  if (!state.taxonomy) {
    return '<section class="taxonomy"><h2>Taxonomy</h2><p class="hint">not loaded</p></section>';
  }
  const roots = state.taxonomy.nodes.filter((n) => n.parent === null);
  const items = roots
    .map((root) => {
      const children = state.taxonomy!.nodes.filter((n) => n.parent === root.id);
      return `
<li>
  ${renderNodeRow(root.id, root.name, state)}
  <ul>${children.map((c) => renderNodeRow(c.id, c.name, state, true)).join('')}</ul>
</li>`;
    })
    .join('');
  const parentOptions = roots
    .map((r) => `<option value="${attr(r.id)}">${escapeHtml(r.name)}</option>`)
    .join('');
  return `
<section class="taxonomy">
  <h2>Taxonomy <span class="version">v${state.taxonomy.version}</span></h2>
  <ul class="tree">${items || '<li class="hint">no nodes yet</li>'}</ul>
  <form id="node-form" class="node-form" autocomplete="off">
    <input name="name" placeholder="new node name" required>
    <select name="parent">
      <option value="">top level</option>
      ${parentOptions}
    </select>
    <button type="submit">add</button>
  </form>
</section>`;
}

function renderNodeRow(
  nodeId: string,
  name: string,
  state: WorkbenchState,
  child = false
): string {
  const active = state.selectedNode === nodeId ? ' selected' : '';
  return `
<${child ? 'li' : 'div'} class="node-row${active}">
  <button data-action="select-node" data-node="${attr(nodeId)}">
    ${escapeHtml(name)} <span class="badge">${badgeCount(state, nodeId)}</span>
  </button>
</${child ? 'li' : 'div'}>`;
}

// -- suggestions ------------------------------------------------------------

function renderSuggestions(state: WorkbenchState): string {
  if (state.suggestionsFor === null) {
    return '<section class="suggestions"><h2>Specializations</h2><p class="hint">search first</p></section>';
  }
  if (state.suggestions.length === 0) {
    return `
<section class="suggestions">
  <h2>Specializations</h2>
  <p class="empty-state">No specialized queries for <b>${escapeHtml(
    state.suggestionsFor
  )}</b>.</p>
</section>`;
  }
  return `
<section class="suggestions">
  <h2>Specializations of <b>${escapeHtml(state.suggestionsFor)}</b></h2>
  <ul>${state.suggestions.map(renderSuggestionRow).join('')}</ul>
</section>`;
}

function renderSuggestionRow(s: Suggestion): string {
  const novel =
    s.novel_topic_ids.length > 0
      ? ` <span class="badge novel" title="${attr(s.novel_topic_ids.join(', '))}">${
          s.novel_topic_ids.length
        } new</span>`
      : '';
  return `
<li>
  <button data-action="follow-suggestion" data-query="${attr(s.query)}">
    ${escapeHtml(s.query)}
  </button>
  <span class="pop">${s.popularity}</span>${novel}
</li>`;
}
