//! Timeout-guarded statement execution against SQLite files.

use std::path::Path;
use std::time::{Duration, Instant};

use rusqlite::types::Value as SqlValue;
use rusqlite::{Connection, OpenFlags};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("{0}")]
    Engine(String),
    #[error("execution exceeded {0:?}")]
    Timeout(Duration),
    #[error("cannot open database: {0}")]
    Open(String),
}

/// Rows returned by one statement, in engine order.
pub type Rows = Vec<Vec<SqlValue>>;

/// Opens `path` read-write with foreign keys enforced.
pub fn open(path: &Path) -> Result<Connection, ExecError> {
    let conn = Connection::open_with_flags(path, OpenFlags::SQLITE_OPEN_READ_WRITE | OpenFlags::SQLITE_OPEN_NO_MUTEX)
        .map_err(|e| ExecError::Open(format!("{}: {e}", path.display())))?;
    conn.pragma_update(None, "foreign_keys", true)
        .map_err(|e| ExecError::Open(e.to_string()))?;
    Ok(conn)
}

/// Runs one statement to completion, collecting any rows. The statement
/// is interrupted once `timeout` has elapsed.
pub fn run(conn: &Connection, sql: &str, timeout: Duration) -> Result<Rows, ExecError> {
    let deadline = Instant::now() + timeout;
    conn.progress_handler(1_000, Some(move || Instant::now() >= deadline))
        .map_err(|e| ExecError::Engine(e.to_string()))?;
    let result = collect(conn, sql);
    conn.progress_handler(0, None::<fn() -> bool>)
        .map_err(|e| ExecError::Engine(e.to_string()))?;
    result.map_err(|e| {
        if Instant::now() >= deadline && matches!(e.sqlite_error_code(), Some(rusqlite::ErrorCode::OperationInterrupted)) {
            ExecError::Timeout(timeout)
        } else {
            ExecError::Engine(e.to_string())
        }
    })
}

fn collect(conn: &Connection, sql: &str) -> rusqlite::Result<Rows> {
    let mut stmt = conn.prepare(sql)?;
    let width = stmt.column_count();
    let mut rows = stmt.raw_query();
    let mut out = Vec::new();
    while let Some(row) = rows.next()? {
        out.push((0..width).map(|i| row.get::<_, SqlValue>(i)).collect::<Result<_, _>>()?);
    }
    Ok(out)
}

/// Checks that `sql` executes on the database at `path`, leaving the file
/// unchanged.
pub fn check(path: &Path, sql: &str, timeout: Duration) -> Result<(), ExecError> {
    let mut conn = open(path)?;
    let tx = conn.transaction().map_err(|e| ExecError::Engine(e.to_string()))?;
    run(&tx, sql, timeout)?;
    tx.rollback().map_err(|e| ExecError::Engine(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db() -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.sqlite");
        let c = Connection::open(&p).unwrap();
        c.execute_batch("CREATE TABLE t (a INTEGER); INSERT INTO t VALUES (1), (2);").unwrap();
        (dir, p)
    }

    #[test]
    fn check_rolls_back() {
        let (_d, p) = db();
        check(&p, "DELETE FROM t", Duration::from_secs(5)).unwrap();
        let c = open(&p).unwrap();
        assert_eq!(run(&c, "SELECT COUNT(*) FROM t", Duration::from_secs(5)).unwrap(), vec![vec![SqlValue::Integer(2)]]);
    }

    #[test]
    fn engine_errors_and_timeouts() {
        let (_d, p) = db();
        let e = check(&p, "SELECT nope FROM t", Duration::from_secs(5)).unwrap_err();
        assert!(matches!(e, ExecError::Engine(m) if m.contains("no such column")));
        let slow = "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT COUNT(*) FROM c";
        let e = check(&p, slow, Duration::from_millis(50)).unwrap_err();
        assert_eq!(e, ExecError::Timeout(Duration::from_millis(50)));
    }
}
