"""Record a real training-event log for the UI replay tests.

Runs the actual backend for three automatic episodes plus a manual park,
and freezes the full event stream together with the backend's final
tables, which the client-side reducer must reproduce exactly.

Usage: python3 scripts/record_fixture.py  (from frontend/, with the
package importable, e.g. after `pip install -e ..`)
"""

from __future__ import annotations

import json
import pathlib

from qcoach.hitl import TrainingMode
from qcoach.learn import Hyperparams
from qcoach.maze import MazeConfig
from qcoach.session import Session

OUT = pathlib.Path(__file__).resolve().parent.parent / "test" / "fixtures" / "events_3ep.json"


def main() -> None:
    session = Session(MazeConfig(), Hyperparams(), seed=2024, step_interval_ms=0)
    sub = session.bus.subscribe()
    while len([e for e in session.loop.episodes if not e.aborted]) < 3:
        session.step()
    session.set_mode(TrainingMode.MANUAL)
    session.step()  # parks awaiting advice

    events = []
    while not sub.queue.empty():
        events.append(sub.queue.get_nowait().to_dict())

    status = session.status()
    fixture = {
        "config": session.config.to_dict(),
        "events": events,
        "final_q": session.loop.q.to_lists(),
        "final_visits": session.loop.counts.to_lists(),
        "final_status": {
            "mode": status["mode"],
            "phase": status["phase"],
            "episode": status["episode"],
            "score": status["score"],
            "epsilon": status["epsilon"],
            "awaiting": status["awaiting"],
            "last_action": status["last_action"],
            "last_reward": status["last_reward"],
            "current_state": status["current_state"],
        },
        "last_trajectory": session.snapshot_trajectory(),
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(fixture, indent=1, sort_keys=True) + "\n")
    print(f"wrote {OUT} ({len(events)} events)")


if __name__ == "__main__":
    main()
