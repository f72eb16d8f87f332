/**
 * Screen logic and panel renderers.
 *
 * Outcome mapping and HTML generation are plain functions over data so
 * tests can drive them without a browser; main.ts glues them to the DOM.
 * Malformed pastes are caught client-side (prefix check) and never reach
 * the server. Network failures surface as a retry banner distinct from
 * protocol rejections.
 */

import {
  type AggregateResult,
  CARD_TEXT_PREFIX,
  type CouponFields,
  type Dose1Result,
  type Dose2Result,
  GatewayClient,
  GatewayError,
} from "./api";
import type { SessionSnapshot } from "./session";

// -- check-in ----------------------------------------------------------------

export type CheckinOutcome =
  | { kind: "accepted"; coupon: CouponFields }
  | { kind: "already-used"; detail: string }
  | { kind: "phase-inactive"; detail: string }
  | { kind: "format-error" }
  | { kind: "rejected"; code: string; detail: string }
  | { kind: "network-error" };

export async function submitCheckin(
  api: GatewayClient,
  pastedText: string,
): Promise<CheckinOutcome> {
  const text = pastedText.trim();
  if (!text.startsWith(CARD_TEXT_PREFIX)) {
    return { kind: "format-error" };
  }
  try {
    return { kind: "accepted", coupon: await api.checkin(text) };
  } catch (error) {
    if (error instanceof GatewayError) {
      if (error.code === "AlreadyRedeemed") {
        return { kind: "already-used", detail: error.detail };
      }
      if (error.code === "PhaseNotActive") {
        return { kind: "phase-inactive", detail: error.detail };
      }
      return { kind: "rejected", code: error.code, detail: error.detail };
    }
    return { kind: "network-error" };
  }
}

export function renderCheckinOutcome(outcome: CheckinOutcome): string {
  switch (outcome.kind) {
    case "accepted": {
      const c = outcome.coupon;
      return panel(
        "panel accept",
        "Coupon accepted",
        `<dl>
          <dt>Phase</dt><dd>${escapeHtml(c.phase)}</dd>
          <dt>Coupon</dt><dd>${c.number} of ${c.total}</dd>
          <dt>City</dt><dd>${escapeHtml(c.city)}</dd>
          <dt>Group</dt><dd>${escapeHtml([c.age_band, c.job].filter(Boolean).join(", "))}</dd>
        </dl>`,
      );
    }
    case "already-used":
      return panel(
        "panel warn already-used",
        "Coupon already used",
        `<p>This coupon has been redeemed before. One coupon admits one person.</p>
         <p class="detail">${escapeHtml(outcome.detail)}</p>`,
      );
    case "phase-inactive":
      return panel(
        "panel warn phase-inactive",
        "Phase not active",
        `<p class="detail">${escapeHtml(outcome.detail)}</p>`,
      );
    case "format-error":
      return panel(
        "panel error format-error",
        "Not a card",
        `<p>Pasted text must start with <code>${CARD_TEXT_PREFIX}</code>.</p>`,
      );
    case "rejected":
      return renderProtocolError(outcome.code, outcome.detail);
    case "network-error":
      return panel(
        "panel retry network-error",
        "Gateway unreachable",

        `<p>Nothing was changed. Check the connection and retry.</p>`,
      );
  }
}

// -- dose issuance -------------------------------------------------------------

export type DoseOutcome =
  | { kind: "cards"; cards: { label: string; text: string }[] }
  | { kind: "rejected"; code: string; detail: string }
  | { kind: "network-error" };

export function dose1Cards(result: Dose1Result): DoseOutcome {
  return {
    kind: "cards",
    cards: [
      { label: "Badge", text: result.badge_card_text },
      { label: "Passkey", text: result.passkey_card_text },
    ],
  };
}

export function dose2Cards(result: Dose2Result): DoseOutcome {
  return {
    kind: "cards",
    cards: [
      { label: "Badge (both doses)", text: result.badge_card_text },
      { label: "Status", text: result.status_card_text },
    ],
  };
}

export function doseFailure(error: unknown): DoseOutcome {
  if (error instanceof GatewayError) {
    return { kind: "rejected", code: error.code, detail: error.detail };
  }
  return { kind: "network-error" };
}

export function renderDoseOutcome(outcome: DoseOutcome): string {
  switch (outcome.kind) {
    case "cards":
      return outcome.cards
        .map(
          (card) => `
        <section class="card-block" data-label="${escapeHtml(card.label)}">
          <h3>${escapeHtml(card.label)}</h3>
          <pre class="card-text">${escapeHtml(card.text)}</pre>
          <canvas class="qr" data-card-text="${escapeHtml(card.text)}"></canvas>
        </section>`,
        )
        .join("\n");
    case "rejected":
      return renderIdentityBindingFailure(outcome.code, outcome.detail);
    case "network-error":
      return panel(
        "panel retry network-error",
        "Gateway unreachable",
        `<p>Nothing was changed. Check the connection and retry.</p>`,
      );
  }
}

// -- verification --------------------------------------------------------------

export function renderVerifyPanel(snapshot: SessionSnapshot): string {
  if (snapshot.level === "none" || snapshot.dosesReceived === null) {
    return panel("panel idle", "No card scanned", "<p>Paste a Status card to begin.</p>");
  }
  const dosesLine = `<p class="doses">Doses received: <strong>${snapshot.dosesReceived}</strong></p>`;
  if (snapshot.level === "status") {
    return panel("panel disclosure level-status", "Vaccination status", dosesLine);
  }
  const nameLine = `<p class="holder-name">Name: <strong>${escapeHtml(snapshot.name ?? "")}</strong></p>`;
  if (snapshot.level === "name" || snapshot.record === null) {
    return panel("panel disclosure level-name", "Identity", dosesLine + nameLine);
  }
  const record = snapshot.record;
  const doses = record.doses
    .map(
      (d) =>
        `<li>Dose ${d.dose_number}: ${escapeHtml(d.manufacturer)}, ${escapeHtml(d.date)}, lot ${escapeHtml(d.lot)}</li>`,
    )
    .join("");
  return panel(
    "panel disclosure level-full",
    "Full record",
    dosesLine +
      nameLine +
      `<p>Born ${escapeHtml(record.pii.dob)}${record.pii.sex ? ", " + escapeHtml(record.pii.sex) : ""}</p>
       <ul class="doses">${doses}</ul>
       <p class="clinic">${escapeHtml(record.clinic.clinic_name)}, ${escapeHtml(record.clinic.location)}, ${escapeHtml(record.clinic.timestamp)}</p>`,
  );
}

export function renderIdentityBindingFailure(code: string, detail: string): string {
  if (code === "CommitmentMismatch" || code === "IdentityMismatch") {
    return panel(
      "panel error binding-failure",
      "Identity mismatch",
      `<p>The Passkey does not belong to this card.</p>
       <p class="detail">${escapeHtml(detail)}</p>`,
    );
  }
  return renderProtocolError(code, detail);
}

// -- dashboard -------------------------------------------------------------------

export function renderAggregateBars(result: AggregateResult): string {
  const max = Math.max(1, ...result.groups.map((g) => g.count));
  const rows = result.groups
    .map(
      (g) => `
      <div class="bar-row" data-value="${escapeHtml(g.value)}" data-count="${g.count}">
        <span class="bar-label">${escapeHtml(g.value)}</span>
        <span class="bar" style="width: ${Math.round((100 * g.count) / max)}%"></span>
        <span class="bar-count">${g.count}</span>
      </div>`,
    )
    .join("\n");
  return panel(
    "panel dashboard",
    `Records by ${escapeHtml(result.dimension)}`,
    rows || "<p>No records yet.</p>",
  );
}

// -- shared ----------------------------------------------------------------------

export function renderProtocolError(code: string, detail: string): string {
  return panel(
    "panel error protocol-error",
    escapeHtml(code),
    `<p class="detail">${escapeHtml(detail)}</p>`,
  );
}

function panel(cssClass: string, title: string, body: string): string {
  return `<div class="${cssClass}"><h2>${title}</h2>${body}</div>`;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}
