// Mutation wrapper implementing the optimistic-concurrency contract: every
// mutation carries the session's revision; a 409 means someone else moved
// first, so the session refetches the project and replays nothing — the
// user re-applies their edit against fresh state if they still want it.

import { ApiClient, ApiError } from "./api.js";
import type { ProjectDto } from "./types.js";
import { cancelPending, syncRevision, type UiSession } from "./session.js";

export type MutationResult<T> =
  | { ok: true; session: UiSession; value: T }
  | { ok: false; session: UiSession; project: ProjectDto; error: ApiError };

export async function applyMutation<T>(
  api: ApiClient,
  session: UiSession,
  mutate: (revision: number) => Promise<T>,
  revisionOf: (value: T) => number,
): Promise<MutationResult<T>> {
  try {
    const value = await mutate(session.revision);
    return {
      ok: true,
      session: syncRevision(session, revisionOf(value)),
      value,
    };
  } catch (error) {
    if (error instanceof ApiError && error.status === 409) {
      const envelope = await api.getProject(session.projectId);
      return {
        ok: false,
        session: cancelPending(
          syncRevision(session, envelope.project.revision),
        ),
        project: envelope.project,
        error,
      };
    }
    throw error;
  }
}

export function envelopeRevision(value: { project: ProjectDto }): number {
  return value.project.revision;
}

export function bareRevision(value: { revision: number }): number {
  return value.revision;
}
