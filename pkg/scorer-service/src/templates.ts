/** Prompt templates with premise/hypothesis slots. */

import * as fs from "fs";

export interface PromptTemplate {
  id: string;
  text: string;
}

export const DEFAULT_TEMPLATES: PromptTemplate[] = [
  { id: "means", text: "{premise}, which means that {hypothesis}" },
];

export function renderTemplate(
  template: PromptTemplate,
  premise: string,
  hypothesis: string,
): string {
  return template.text
    .replace("{premise}", premise)
    .replace("{hypothesis}", hypothesis);
}

/** Forward instances per template; symmetric mode adds the reversed
 * instance of every template, removing directional signal from the
 * input. */
export function renderAll(
  templates: PromptTemplate[],
  premise: string,
  hypothesis: string,
  symmetric: boolean,
): string[] {
  const out: string[] = [];
  for (const t of templates) {
    out.push(renderTemplate(t, premise, hypothesis));
    if (symmetric) out.push(renderTemplate(t, hypothesis, premise));
  }
  return out;
}

export function loadTemplates(path: string): PromptTemplate[] {
  const data = JSON.parse(fs.readFileSync(path, "utf8"));
  const templates: PromptTemplate[] = (data.templates ?? []).map(
    (t: { id: unknown; text: unknown }) => ({
      id: String(t.id),
      text: String(t.text),
    }),
  );
  if (templates.length === 0) {
    throw new Error(`no templates in ${path}`);
  }
  return templates;
}
