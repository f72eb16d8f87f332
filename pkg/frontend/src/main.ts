/**
 * DOM wiring for the scanner console. All state lives in module scope for
 * one operator session; switching away from the verifier tab tears the
 * verification session down so no decrypted PII outlives the screen.
 */

import { GatewayClient, GatewayError } from "./api";
import { drawQr } from "./qr";
import {
  dose1Cards,
  dose2Cards,
  doseFailure,
  renderAggregateBars,
  renderCheckinOutcome,
  renderDoseOutcome,
  renderIdentityBindingFailure,
  renderProtocolError,
  renderVerifyPanel,
  submitCheckin,
} from "./screens";
import { type Mode, VerificationSession } from "./session";

const api = new GatewayClient(
  (document.querySelector("meta[name=gateway]") as HTMLMetaElement)?.content ??
    "http://127.0.0.1:8590",
);
let session = new VerificationSession(api);

function $(id: string): HTMLElement {
  const element = document.getElementById(id);
  if (!element) throw new Error(`missing #${id}`);
  return element;
}

function value(id: string): string {
  return ($(id) as HTMLInputElement | HTMLTextAreaElement).value.trim();
}

async function paintQrCodes(container: HTMLElement): Promise<void> {
  for (const canvas of container.querySelectorAll<HTMLCanvasElement>("canvas.qr")) {
    const text = canvas.dataset.cardText;
    if (text) await drawQr(canvas, text);
  }
}

function switchMode(mode: Mode): void {
  for (const section of document.querySelectorAll<HTMLElement>("[data-mode]")) {
    section.hidden = section.dataset.mode !== mode;
  }
  for (const tab of document.querySelectorAll<HTMLElement>("[data-mode-tab]")) {
    tab.classList.toggle("active", tab.dataset.modeTab === mode);
  }
  if (mode !== "verifier") {
    session.teardown();
    session = new VerificationSession(api);
    $("verify-panel").innerHTML = renderVerifyPanel(session.snapshot());
  }
}

function bindTabs(): void {
  for (const tab of document.querySelectorAll<HTMLElement>("[data-mode-tab]")) {
    tab.addEventListener("click", () => switchMode(tab.dataset.modeTab as Mode));
  }
}

function bindCheckin(): void {
  $("checkin-run").addEventListener("click", async () => {
    const outcome = await submitCheckin(api, value("checkin-text"));
    $("checkin-panel").innerHTML = renderCheckinOutcome(outcome);
    if (outcome.kind === "accepted") {
      ($("dose1-coupon") as HTMLTextAreaElement).value = value("checkin-text");
    }
  });
}

function bindDose1(): void {
  $("dose1-run").addEventListener("click", async () => {
    const target = $("dose1-panel");
    try {
      const result = await api.dose1(
        value("dose1-coupon"),
        { name: value("dose1-name"), dob: value("dose1-dob"), sex: value("dose1-sex") || null },
        {
          manufacturer: value("dose1-manufacturer"),
          dose_number: 1,
          date: value("dose1-date"),
          lot: value("dose1-lot"),
        },
        { clinic_name: value("dose1-clinic"), location: value("dose1-location") },
      );
      target.innerHTML = renderDoseOutcome(dose1Cards(result));
      await paintQrCodes(target);
    } catch (error) {
      target.innerHTML = renderDoseOutcome(doseFailure(error));
    }
  });
}

function bindDose2(): void {
  $("dose2-run").addEventListener("click", async () => {
    const target = $("dose2-panel");
    try {
      const result = await api.dose2(value("dose2-badge"), value("dose2-passkey"), {
        manufacturer: value("dose2-manufacturer"),
        dose_number: 2,
        date: value("dose2-date"),
        lot: value("dose2-lot"),
      });
      target.innerHTML = renderDoseOutcome(dose2Cards(result));
      await paintQrCodes(target);
    } catch (error) {
      target.innerHTML = renderDoseOutcome(doseFailure(error));
    }
  });
}

function bindVerify(): void {
  const panel = $("verify-panel");
  const show = () => {
    panel.innerHTML = renderVerifyPanel(session.snapshot());
  };
  $("verify-status-run").addEventListener("click", async () => {
    try {
      await session.checkStatus(value("verify-status-text"));
      show();
    } catch (error) {
      panel.innerHTML =
        error instanceof GatewayError
          ? renderProtocolError(error.code, error.detail)
          : renderProtocolError("NetworkError", "gateway unreachable");
    }
  });
  $("verify-name-run").addEventListener("click", async () => {
    try {
      await session.escalateToName(
        value("verify-status-text"),
        value("verify-passkey-text"),
        value("verify-coupon-id"),
      );
      show();
    } catch (error) {
      panel.innerHTML =
        error instanceof GatewayError
          ? renderIdentityBindingFailure(error.code, error.detail)
          : renderProtocolError("NetworkError", String(error));
    }
  });
  $("verify-full-run").addEventListener("click", async () => {
    try {
      await session.escalateToFull(value("verify-badge-text"), value("verify-passkey-text"));
      show();
    } catch (error) {
      panel.innerHTML =
        error instanceof GatewayError
          ? renderIdentityBindingFailure(error.code, error.detail)
          : renderProtocolError("NetworkError", String(error));
    }
  });
  $("verify-clear").addEventListener("click", () => {
    session.teardown();
    for (const id of ["verify-status-text", "verify-passkey-text", "verify-badge-text", "verify-coupon-id"]) {
      ($(id) as HTMLTextAreaElement | HTMLInputElement).value = "";
    }
    show();
  });
  show();
}

function bindDashboard(): void {
  $("dashboard-run").addEventListener("click", async () => {
    const dimension = ($("dashboard-dimension") as HTMLSelectElement).value;
    try {
      $("dashboard-panel").innerHTML = renderAggregateBars(await api.aggregate(dimension));
    } catch (error) {
      $("dashboard-panel").innerHTML =
        error instanceof GatewayError
          ? renderProtocolError(error.code, error.detail)
          : renderProtocolError("NetworkError", "gateway unreachable");
    }
  });
}

bindTabs();
bindCheckin();
bindDose1();
bindDose2();
bindVerify();
bindDashboard();
switchMode("clinic");
