import { Catalog, TryonResult } from "./api.js";

export interface HistoryEntry {
  result: TryonResult;
  at: number;
}

export interface SessionState {
  catalog: Catalog | null;
  catalogError: string | null;
  selectedPerson: string | null;
  selectedGarment: string | null;
  inFlight: boolean;
  tryonError: string | null;
  history: HistoryEntry[];
  showDebug: boolean;
}

type Listener = (state: SessionState) => void;

/** Single mutable session store; every mutation notifies subscribers. */
export class Store {
  private state: SessionState = {
    catalog: null,
    catalogError: null,
    selectedPerson: null,
    selectedGarment: null,
    inFlight: false,
    tryonError: null,
    history: [],
    showDebug: false,
  };
  private listeners: Listener[] = [];

  get(): SessionState {
    return this.state;
  }

  subscribe(fn: Listener): void {
    this.listeners.push(fn);
  }

  update(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  appendHistory(result: TryonResult): void {
    this.update({ history: [...this.state.history, { result, at: Date.now() }] });
  }
}

/** True when the two newest history entries show different persons, so a
 * side-by-side compare would be misleading. */
export function compareMixesPersons(history: HistoryEntry[]): boolean {
  if (history.length < 2) return false;
  const [a, b] = history.slice(-2);
  return a.result.person_id !== b.result.person_id;
}
