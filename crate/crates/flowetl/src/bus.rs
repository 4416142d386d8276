//! In-process, topic-based message bus.
//!
//! Components of the pipeline never call each other directly: observers,
//! planner, workers and the reporting engine communicate only through
//! named topics here. Each topic is an append-only log; every message
//! gets a contiguous offset starting at 0, and any number of independent
//! cursors can read the log at their own pace, including replaying it
//! from the start. This is the one stateful shared component in the
//! system, which is exactly why it is small.
//!
//! Topics are single-partition and in-memory for the duration of a run;
//! [`MessageBus::persist`] can dump each log as newline-delimited JSON
//! for post-run inspection.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{Error, Result};

/// Hard cap on a single payload. Oversized payloads are refused rather
/// than truncated; a pipeline that wants to move more data per message
/// should move a file path instead.
pub const MAX_PAYLOAD_BYTES: usize = 64 * 1024 * 1024;

/// Topic carrying sampled source-file artifacts.
pub const TOPIC_SOURCE_ARTIFACTS: &str = "source-artifacts";
/// Topic carrying full target-file artifacts.
pub const TOPIC_TARGET_ARTIFACTS: &str = "target-artifacts";
/// Topic carrying plan payloads from the planner to workers.
pub const TOPIC_PLANS: &str = "plans";
/// Topic carrying runtime metrics from every component.
pub const TOPIC_METRICS: &str = "metrics";

/// The four topics a pipeline run wires up.
pub fn standard_topics() -> [&'static str; 4] {
    [
        TOPIC_SOURCE_ARTIFACTS,
        TOPIC_TARGET_ARTIFACTS,
        TOPIC_PLANS,
        TOPIC_METRICS,
    ]
}

/// One bus message: its position in the topic log, the payload bytes,
/// and the wall-clock time of the append.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub offset: u64,
    pub payload: Arc<[u8]>,
    pub timestamp_ms: u64,
}

impl Message {
    /// Decodes the payload as JSON into the given type.
    pub fn decode<T: serde::de::DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_slice(&self.payload)
            .map_err(|e| Error::JsonTranslation(format!("bus payload: {e}")))
    }
}

struct TopicHandle {
    log: Mutex<Vec<Message>>,
    appended: Condvar,
}

impl TopicHandle {
    fn new() -> TopicHandle {
        TopicHandle {
            log: Mutex::new(Vec::new()),
            appended: Condvar::new(),
        }
    }
}

/// The bus: a set of named topics, safe for concurrent publishers and
/// consumers. Cheap to share — clone an `Arc<MessageBus>` per component.
pub struct MessageBus {
    topics: Mutex<HashMap<String, Arc<TopicHandle>>>,
    max_payload: usize,
}

impl Default for MessageBus {
    fn default() -> Self {
        MessageBus::new()
    }
}

impl MessageBus {
    pub fn new() -> MessageBus {
        MessageBus {
            topics: Mutex::new(HashMap::new()),
            max_payload: MAX_PAYLOAD_BYTES,
        }
    }

    /// A bus with a non-default payload cap (tests use small ones).
    pub fn with_max_payload(max_payload: usize) -> MessageBus {
        MessageBus {
            topics: Mutex::new(HashMap::new()),
            max_payload,
        }
    }

    fn handle(&self, topic: &str) -> Arc<TopicHandle> {
        let mut topics = self.topics.lock().unwrap();
        topics
            .entry(topic.to_string())
            .or_insert_with(|| Arc::new(TopicHandle::new()))
            .clone()
    }

    /// Appends a payload to a topic (created on first use) and returns
    /// its offset.
    pub fn publish(&self, topic: &str, payload: Vec<u8>) -> Result<u64> {
        if payload.len() > self.max_payload {
            return Err(Error::PayloadTooLarge {
                size: payload.len(),
                limit: self.max_payload,
            });
        }
        let handle = self.handle(topic);
        let mut log = handle.log.lock().unwrap();
        let offset = log.len() as u64;
        log.push(Message {
            offset,
            payload: payload.into(),
            timestamp_ms: now_ms(),
        });
        handle.appended.notify_all();
        Ok(offset)
    }

    /// Serializes a value as JSON and publishes it.
    pub fn publish_json<T: Serialize>(&self, topic: &str, value: &T) -> Result<u64> {
        let payload = serde_json::to_vec(value)
            .map_err(|e| Error::JsonTranslation(format!("bus payload: {e}")))?;
        self.publish(topic, payload)
    }

    /// A fresh cursor at offset 0 of the topic.
    pub fn cursor(&self, topic: &str) -> Cursor {
        Cursor {
            topic: topic.to_string(),
            handle: self.handle(topic),
            next: 0,
        }
    }

    /// Current length of a topic's log.
    pub fn log_length(&self, topic: &str) -> usize {
        self.handle(topic).log.lock().unwrap().len()
    }

    /// Writes one `<topic>.ndjson` file per topic into `dir`: one JSON
    /// object per message, for post-run inspection. JSON payloads are
    /// embedded as-is; anything else is stored as (lossy) text.
    pub fn persist(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let topics: Vec<(String, Arc<TopicHandle>)> = {
            let map = self.topics.lock().unwrap();
            map.iter().map(|(n, h)| (n.clone(), h.clone())).collect()
        };
        for (name, handle) in topics {
            let log = handle.log.lock().unwrap().clone();
            let mut file = std::fs::File::create(dir.join(format!("{name}.ndjson")))?;
            for msg in &log {
                let payload = match serde_json::from_slice::<serde_json::Value>(&msg.payload) {
                    Ok(v) => v,
                    Err(_) => {
                        serde_json::Value::String(String::from_utf8_lossy(&msg.payload).into())
                    }
                };
                let line = serde_json::json!({
                    "offset": msg.offset,
                    "timestamp_ms": msg.timestamp_ms,
                    "payload": payload,
                });
                writeln!(file, "{line}")?;
            }
        }
        Ok(())
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// An independent read position in one topic. Cursors never affect each
/// other or the log; any number may consume the same topic (fan-out).
pub struct Cursor {
    topic: String,
    handle: Arc<TopicHandle>,
    next: u64,
}

impl Cursor {
    pub fn topic(&self) -> &str {
        &self.topic
    }

    /// The offset the next consume would return.
    pub fn position(&self) -> u64 {
        self.next
    }

    /// Returns the message at the cursor and advances, or `None` when the
    /// cursor is at the head of the log.
    pub fn consume(&mut self) -> Option<Message> {
        let log = self.handle.log.lock().unwrap();
        let msg = log.get(self.next as usize)?.clone();
        self.next += 1;
        Some(msg)
    }

    /// Like [`Cursor::consume`], but waits up to `timeout` for a message
    /// to arrive before giving up.
    pub fn consume_timeout(&mut self, timeout: Duration) -> Option<Message> {
        let deadline = std::time::Instant::now() + timeout;
        let mut log = self.handle.log.lock().unwrap();
        loop {
            if let Some(msg) = log.get(self.next as usize) {
                let msg = msg.clone();
                self.next += 1;
                return Some(msg);
            }
            let now = std::time::Instant::now();
            if now >= deadline {
                return None;
            }
            let (guard, result) = self
                .handle
                .appended
                .wait_timeout(log, deadline - now)
                .unwrap();
            log = guard;
            if result.timed_out() && log.len() as u64 <= self.next {
                return None;
            }
        }
    }

    /// Drains every message currently in the log from the cursor onward.
    pub fn drain(&mut self) -> Vec<Message> {
        let mut out = Vec::new();
        while let Some(msg) = self.consume() {
            out.push(msg);
        }
        out
    }

    /// Moves the cursor, clamped to the current log length; `reset(0)`
    /// replays the topic from the beginning.
    pub fn reset(&mut self, offset: u64) {
        let len = self.handle.log.lock().unwrap().len() as u64;
        self.next = offset.min(len);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;

    #[test]
    fn offsets_are_contiguous_from_zero() {
        let bus = MessageBus::new();
        assert_eq!(bus.publish("t", b"a".to_vec()).unwrap(), 0);
        assert_eq!(bus.publish("t", b"b".to_vec()).unwrap(), 1);
        assert_eq!(bus.publish("t", b"c".to_vec()).unwrap(), 2);
        assert_eq!(bus.log_length("t"), 3);
    }

    #[test]
    fn oversize_payload_is_refused() {
        let bus = MessageBus::with_max_payload(8);
        let err = bus.publish("t", vec![0u8; 9]).unwrap_err();
        assert!(err.to_string().contains("payload too large"), "{err}");
        assert_eq!(bus.log_length("t"), 0);
        bus.publish("t", vec![0u8; 8]).unwrap();
    }

    #[test]
    fn default_cap_is_64_mib() {
        assert_eq!(MAX_PAYLOAD_BYTES, 64 << 20);
    }

    #[test]
    fn consume_returns_in_publication_order_then_none() {
        let bus = MessageBus::new();
        bus.publish("t", b"first".to_vec()).unwrap();
        bus.publish("t", b"second".to_vec()).unwrap();
        let mut cursor = bus.cursor("t");
        assert_eq!(&*cursor.consume().unwrap().payload, b"first");
        assert_eq!(&*cursor.consume().unwrap().payload, b"second");
        assert!(cursor.consume().is_none());
        // Publishing after the head moves it again.
        bus.publish("t", b"third".to_vec()).unwrap();
        assert_eq!(&*cursor.consume().unwrap().payload, b"third");
    }

    #[test]
    fn reset_replays_the_identical_sequence() {
        let bus = MessageBus::new();
        for i in 0..5 {
            bus.publish("t", vec![i]).unwrap();
        }
        let mut cursor = bus.cursor("t");
        let first: Vec<Message> = cursor.drain();
        cursor.reset(0);
        let second: Vec<Message> = cursor.drain();
        assert_eq!(first, second);
        assert_eq!(first.len(), 5);
    }

    #[test]
    fn reset_is_clamped_to_log_length() {
        let bus = MessageBus::new();
        bus.publish("t", b"x".to_vec()).unwrap();
        let mut cursor = bus.cursor("t");
        cursor.reset(99);
        assert_eq!(cursor.position(), 1);
        assert!(cursor.consume().is_none());
    }

    #[test]
    fn standard_topics_are_the_four_wired_ones() {
        let topics = standard_topics();
        assert_eq!(topics.len(), 4);
        assert!(topics.contains(&"metrics"));
        let unique: std::collections::HashSet<_> = topics.iter().collect();
        assert_eq!(unique.len(), 4);
    }

    #[test]
    fn independent_cursors_fan_out() {
        let bus = MessageBus::new();
        for i in 0..10u8 {
            bus.publish("t", vec![i]).unwrap();
        }
        let a: Vec<_> = bus.cursor("t").drain();
        let b: Vec<_> = bus.cursor("t").drain();
        assert_eq!(a, b);
    }

    #[test]
    fn consume_timeout_wakes_on_publish() {
        let bus = Arc::new(MessageBus::new());
        let mut cursor = bus.cursor("t");
        let publisher = {
            let bus = bus.clone();
            thread::spawn(move || {
                thread::sleep(Duration::from_millis(30));
                bus.publish("t", b"late".to_vec()).unwrap();
            })
        };
        let msg = cursor.consume_timeout(Duration::from_secs(5)).unwrap();
        assert_eq!(&*msg.payload, b"late");
        publisher.join().unwrap();
    }

    #[test]
    fn consume_timeout_gives_up_quietly() {
        let bus = MessageBus::new();
        let mut cursor = bus.cursor("empty");
        let start = std::time::Instant::now();
        assert!(cursor.consume_timeout(Duration::from_millis(40)).is_none());
        assert!(start.elapsed() >= Duration::from_millis(40));
    }

    #[test]
    fn publish_json_round_trips_through_decode() {
        let bus = MessageBus::new();
        bus.publish_json("t", &serde_json::json!({"k": [1, 2]})).unwrap();
        let msg = bus.cursor("t").consume().unwrap();
        let value: serde_json::Value = msg.decode().unwrap();
        assert_eq!(value, serde_json::json!({"k": [1, 2]}));
    }

    #[test]
    fn concurrent_publishers_lose_nothing() {
        // Scaled-down version of the acceptance check (which runs 16×4
        // with 10⁴ messages): publishers tag messages, consumers must see
        // every tag exactly once and per-publisher tags in order.
        let bus = Arc::new(MessageBus::new());
        let publishers = 8usize;
        let per_publisher = 250usize;
        let mut handles = Vec::new();
        for p in 0..publishers {
            let bus = bus.clone();
            handles.push(thread::spawn(move || {
                for i in 0..per_publisher {
                    bus.publish("load", format!("{p}:{i}").into_bytes()).unwrap();
                }
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
        assert_eq!(bus.log_length("load"), publishers * per_publisher);

        let messages: Vec<Message> = bus.cursor("load").drain();
        let mut last_seen = vec![-1i64; publishers];
        let mut seen = std::collections::HashSet::new();
        for msg in &messages {
            let text = std::str::from_utf8(&msg.payload).unwrap();
            let (p, i) = text.split_once(':').unwrap();
            let (p, i): (usize, i64) = (p.parse().unwrap(), i.parse().unwrap());
            assert!(seen.insert(text.to_string()), "duplicate {text}");
            assert!(i > last_seen[p], "publisher {p} out of order");
            last_seen[p] = i;
        }
        assert_eq!(seen.len(), publishers * per_publisher);
    }

    #[test]
    fn persist_writes_one_ndjson_per_topic() {
        let bus = MessageBus::new();
        bus.publish_json("plans", &serde_json::json!({"plan": 1})).unwrap();
        bus.publish("metrics", b"not json".to_vec()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        bus.persist(dir.path()).unwrap();

        let plans = std::fs::read_to_string(dir.path().join("plans.ndjson")).unwrap();
        let line: serde_json::Value = serde_json::from_str(plans.trim()).unwrap();
        assert_eq!(line["offset"], 0);
        assert_eq!(line["payload"]["plan"], 1);

        let metrics = std::fs::read_to_string(dir.path().join("metrics.ndjson")).unwrap();
        let line: serde_json::Value = serde_json::from_str(metrics.trim()).unwrap();
        assert_eq!(line["payload"], "not json");
    }
}
