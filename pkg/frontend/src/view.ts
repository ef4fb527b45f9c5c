import type { SheetDoc } from "./types.js";

function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/**
 * Pure HTML view of a sheet. Charts are never re-drawn client-side: the
 * preview pane embeds the server's own SVG export, and per-fact cards carry
 * only the statement text plus edit affordances.
 */
export function renderSheet(sheet: SheetDoc, base = ""): string {
  const sections = sheet.structure.sections
    .map((section, i) => {
      const pinned = i === 0;
      const facts = section.fact_ids
        .map((fid) => {
          const card = sheet.facts[fid];
          return `<article class="fact" draggable="true" data-fact-id="${esc(fid)}">
  <p class="statement" data-editable="statement" data-fact-id="${esc(fid)}">${esc(card ? card.statement : "")}</p>
  <button data-action="delete-fact" data-fact-id="${esc(fid)}">Delete</button>
</article>`;
        })
        .join("\n");
      const empty =
        !pinned && section.fact_ids.length === 0
          ? `<p class="empty">No facts here.</p>
<button data-action="delete-section" data-topic="${esc(section.topic)}">Remove section</button>`
          : "";
      const body = pinned
        ? `<p class="intro" data-editable="intro">${esc(sheet.structure.intro_text)}</p>`
        : `${facts}${empty}`;
      return `<section data-topic="${esc(section.topic)}" data-pinned="${pinned}" ${pinned ? "" : 'data-droppable="true"'}>
<h2>${esc(section.topic)}</h2>
${body}
</section>`;
    })
    .join("\n");

  return `<main class="sheet" data-revision="${sheet.revision}">
<h1 data-editable="title">${esc(sheet.structure.title)}</h1>
${sections}
<form data-role="request-fact">
  <input name="request" placeholder="Ask for another fact" value="">
  <button type="submit" disabled>Add fact</button>
</form>
<nav>
  <a data-action="export-svg" href="${base}/sheets/${esc(sheet.id)}/export?format=svg">SVG</a>
  <a data-action="export-pdf" href="${base}/sheets/${esc(sheet.id)}/export?format=pdf">PDF</a>
</nav>
<object class="preview" type="image/svg+xml" data="${base}/sheets/${esc(sheet.id)}/export?format=svg"></object>
</main>`;
}
