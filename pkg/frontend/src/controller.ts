/** Session state machine: one in-flight request, strict position sync.
 *
 * All mutation funnels through the pending flag, so a double-click or a
 * second keypress while a request is in flight never produces a second
 * POST.  A failed submission is queued and retried with the same
 * position and category; a conflict (stale position) resynchronises by
 * refetching the next item, whose position is the service cursor.
 */

import {
  ApiClient,
  ConflictError,
  TransportError,
} from "./api.js";
import { CATEGORIES, isCategory } from "./types.js";
import type { Category, EstimatePayload, Item } from "./types.js";

export interface UiSessionState {
  sessionId: string;
  total: number;
  position: number;
  currentItem: Item | null;
  pending: boolean;
  done: boolean;
  estimate: EstimatePayload | null;
  banner: string | null;
  queued: Category | null;
}

export type Listener = (state: UiSessionState) => void;

export class SessionController {
  readonly state: UiSessionState;
  private listeners: Listener[] = [];

  private constructor(
    private readonly api: ApiClient,
    sessionId: string,
    total: number,
    cursor: number,
  ) {
    this.state = {
      sessionId,
      total,
      position: cursor,
      currentItem: null,
      pending: false,
      done: false,
      estimate: null,
      banner: null,
      queued: null,
    };
  }

  static async start(
    api: ApiClient,
    annotatorId: string,
    sampleSize: number,
    seed: number,
  ): Promise<SessionController> {
    const info = await api.createSession(annotatorId, sampleSize, seed);
    const controller = new SessionController(api, info.session_id, info.total, info.cursor);
    await controller.loadNext();
    return controller;
  }

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  /** Fetch the next unjudged item, or the summary estimate when done. */
  async loadNext(): Promise<void> {
    if (this.state.pending) return;
    this.state.pending = true;
    this.notify();
    try {
      const next = await this.api.nextItem(this.state.sessionId);
      if (next.done) {
        this.state.done = true;
        this.state.currentItem = null;
        this.state.position = this.state.total;
        this.state.estimate = await this.fetchEstimate();
      } else if (next.item) {
        this.state.currentItem = next.item;
        this.state.position = next.item.position;
        this.state.total = next.item.total;
      }
      this.state.banner = null;
      this.state.pending = false;
    } catch (error) {
      if (error instanceof TransportError) {
        // Retry banner; nothing else changes.
        this.state.pending = false;
        this.state.banner = "Network failure while loading; retry when back online.";
      } else {
        this.state.pending = false;
        this.state.banner = String(error);
      }
    }
    this.notify();
  }

  private async fetchEstimate(): Promise<EstimatePayload | null> {
    try {
      return await this.api.estimate();
    } catch {
      return null; // summary still renders; estimate shows as unavailable
    }
  }

  /**
   * Submit one of the six judgments for the current item.
   *
   * Returns false when the submission was blocked (request already in
   * flight, no item loaded) without any network traffic.
   */
  async submit(category: string): Promise<boolean> {
    if (!isCategory(category)) {
      throw new Error(`invalid category ${category}; expected one of ${CATEGORIES.join(", ")}`);
    }
    if (this.state.pending || this.state.done || this.state.currentItem === null) {
      return false;
    }
    this.state.pending = true;
    this.state.queued = null;
    this.notify();
    return this.post(category);
  }

  /** Retry the queued submission (or a failed load) after an outage. */
  async retry(): Promise<void> {
    if (this.state.queued !== null) {
      const category = this.state.queued;
      await this.post(category);
      return;
    }
    if (this.state.banner !== null) {
      this.state.pending = false;
      await this.loadNext();
    }
  }

  private async post(category: Category): Promise<boolean> {
    try {
      const ack = await this.api.submitJudgment(
        this.state.sessionId,
        this.state.position,
        category,
      );
      this.state.position = ack.cursor;
      this.state.pending = false;
      this.state.queued = null;
      this.state.banner = null;
      this.notify();
      await this.loadNext();
      return true;
    } catch (error) {
      if (error instanceof ConflictError) {
        // Stale position: resynchronise from the service cursor.
        this.state.pending = false;
        this.state.queued = null;
        this.notify();
        await this.loadNext();
        return false;
      }
      if (error instanceof TransportError) {
        // Offline: keep controls disabled, queue the exact submission.
        this.state.queued = category;
        this.state.banner = "Offline; judgment queued for retry.";
        this.notify();
        return false;
      }
      this.state.pending = false;
      this.state.banner = String(error);
      this.notify();
      return false;
    }
  }
}

/** Keyboard shortcut mapping: keys 1..6 in the fixed category order. */
export function categoryForKey(key: string): Category | null {
  const index = Number.parseInt(key, 10) - 1;
  if (Number.isNaN(index) || index < 0 || index >= CATEGORIES.length) return null;
  return CATEGORIES[index] ?? null;
}
