/**
 * Verification session state.
 *
 * The disclosure level only ever rises, and only through an explicit
 * escalate call: passkey card text is handed to the network inside
 * escalateToName/escalateToFull and nowhere else. Leaving the screen must
 * call teardown(), which drops every decrypted PII string from state.
 */

import {
  type FullRecordResult,
  GatewayClient,
} from "./api";

export type Mode = "clinic" | "verifier" | "dashboard";

export type DisclosureLevel = "none" | "status" | "name" | "full";

const LEVEL_ORDER: Record<DisclosureLevel, number> = {
  none: 0,
  status: 1,
  name: 2,
  full: 3,
};

export interface SessionSnapshot {
  level: DisclosureLevel;
  dosesReceived: number | null;
  name: string | null;
  record: FullRecordResult | null;
}

export class VerificationSession {
  private level: DisclosureLevel = "none";
  private dosesReceived: number | null = null;
  private name: string | null = null;
  private record: FullRecordResult | null = null;

  constructor(private readonly api: GatewayClient) {}

  snapshot(): SessionSnapshot {
    return {
      level: this.level,
      dosesReceived: this.dosesReceived,
      name: this.name,
      record: this.record,
    };
  }

  private raiseTo(level: DisclosureLevel): void {
    if (LEVEL_ORDER[level] > LEVEL_ORDER[this.level]) {
      this.level = level;
    }
  }

  /** Level 1: scan the Status card alone; shows the dose count only. */
  async checkStatus(statusCardText: string): Promise<SessionSnapshot> {
    const result = await this.api.verifyStatus(statusCardText);
    this.dosesReceived = result.doses_received;
    this.raiseTo("status");
    return this.snapshot();
  }

  /**
   * Level 2: the operator explicitly asked for the name and the holder
   * handed over their Passkey. This is the first call that transmits
   * passkey material.
   */
  async escalateToName(
    statusCardText: string,
    passkeyCardText: string,
    couponId: string,
  ): Promise<SessionSnapshot> {
    if (this.level === "none") {
      throw new Error("verify status first, then escalate");
    }
    const result = await this.api.verifyName(statusCardText, passkeyCardText, couponId);
    this.dosesReceived = result.doses_received;
    this.name = result.name;
    this.raiseTo("name");
    return this.snapshot();
  }

  /** Level 3: full record from Badge plus Passkey, again explicit. */
  async escalateToFull(
    badgeCardText: string,
    passkeyCardText: string,
  ): Promise<SessionSnapshot> {
    if (this.level === "none") {
      throw new Error("verify status first, then escalate");
    }
    const result = await this.api.verifyFull(badgeCardText.trim(), passkeyCardText);
    this.dosesReceived = result.doses_received;
    this.name = result.name;
    this.record = result;
    this.raiseTo("full");
    return this.snapshot();
  }

  /** Clear every decrypted field; call when the operator leaves the screen. */
  teardown(): void {
    this.level = "none";
    this.dosesReceived = null;
    this.name = null;
    this.record = null;
  }
}
