"""
Results store for batch and component-analysis runs
"""
import json
import sqlite3
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional, Union
import logging

from transcriber import config
from transcriber.batch import TrackReport
from transcriber.evaluation import METRIC_FIELDS
from transcriber.pipeline import PipelineConfig

logger = logging.getLogger(__name__)


class ResultsDatabase:
    """Handle all results database operations"""

    def __init__(self, db_path: Optional[Union[str, Path]] = None):
        self.db_path = Path(db_path or config.DATABASE_PATH)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self.init_database()

    @contextmanager
    def get_connection(self):
        """Context manager for database connections"""
        conn = sqlite3.connect(str(self.db_path), check_same_thread=False)
        conn.row_factory = sqlite3.Row
        try:
            yield conn
            conn.commit()
        except Exception as e:
            conn.rollback()
            logger.error(f"Database error: {e}")
            raise
        finally:
            conn.close()

    def init_database(self):
        """Initialize database tables"""
        metric_columns = ',\n'.join(f"{name} REAL" for name in METRIC_FIELDS)
        with self.get_connection() as conn:
            cursor = conn.cursor()

            cursor.execute("""
                CREATE TABLE IF NOT EXISTS runs (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    setup TEXT NOT NULL,
                    config TEXT NOT NULL,
                    started_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
                )
            """)

            cursor.execute(f"""
                CREATE TABLE IF NOT EXISTS track_results (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    run_id INTEGER NOT NULL,
                    track TEXT NOT NULL,
                    status TEXT NOT NULL,
                    error TEXT,
                    num_notes INTEGER DEFAULT 0,
                    {metric_columns},
                    transposition_applied INTEGER,
                    FOREIGN KEY (run_id) REFERENCES runs(id)
                )
            """)

            cursor.execute("""
                CREATE INDEX IF NOT EXISTS idx_track_results_run
                ON track_results(run_id)
            """)

            logger.debug(f"Results database ready at {self.db_path}")

    def start_run(self, setup: str, pipeline_config: Optional[PipelineConfig] = None) -> int:
        """Record a new run and return its id"""
        settings = asdict(pipeline_config or PipelineConfig())
        with self.get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("""
                INSERT INTO runs (setup, config) VALUES (?, ?)
            """, (setup, json.dumps(settings, default=str, sort_keys=True)))
            run_id = cursor.lastrowid
            logger.info(f"Started run {run_id} ({setup})")
            return run_id

    def add_track_result(self, run_id: int, track: TrackReport):
        """Store one track outcome"""
        metrics = track.report.metrics() if track.report is not None else {m: None for m in METRIC_FIELDS}
        transposition = track.report.transposition_applied if track.report is not None else None
        columns = ', '.join(METRIC_FIELDS)
        placeholders = ', '.join('?' for _ in METRIC_FIELDS)
        with self.get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute(f"""
                INSERT INTO track_results
                (run_id, track, status, error, num_notes, {columns}, transposition_applied)
                VALUES (?, ?, ?, ?, ?, {placeholders}, ?)
            """, (run_id, track.track, track.status, track.error, track.num_notes,
                  *[metrics[m] for m in METRIC_FIELDS], transposition))

    def get_run_results(self, run_id: int) -> List[Dict]:
        """All track rows of a run, in insertion order"""
        with self.get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("""
                SELECT * FROM track_results WHERE run_id = ? ORDER BY id
            """, (run_id,))
            return [dict(row) for row in cursor.fetchall()]

    def get_run_summary(self, run_id: int) -> Dict:
        """Mean of every metric over the successful tracks of a run"""
        averages = ', '.join(f"AVG({m}) AS {m}" for m in METRIC_FIELDS)
        with self.get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute(f"""
                SELECT COUNT(*) AS tracks, {averages}
                FROM track_results WHERE run_id = ? AND status = 'ok'
            """, (run_id,))
            summary = dict(cursor.fetchone())
            cursor.execute("""
                SELECT COUNT(*) FROM track_results WHERE run_id = ? AND status != 'ok'
            """, (run_id,))
            summary['failed'] = cursor.fetchone()[0]
            return summary

    def list_runs(self) -> List[Dict]:
        """All runs, newest first"""
        with self.get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("""
                SELECT r.id, r.setup, r.config, r.started_at, COUNT(t.id) AS tracks
                FROM runs r LEFT JOIN track_results t ON t.run_id = r.id
                GROUP BY r.id
                ORDER BY r.id DESC
            """)
            return [dict(row) for row in cursor.fetchall()]
