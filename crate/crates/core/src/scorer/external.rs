//! Line-delimited JSON protocol for scorers living in another process.
//!
//! Each request and each reply is one JSON object on its own line. Requests
//! carry an `id`, a `query` (`describe`, `actions` or `word`), the state's
//! `stack_signature` and, for `actions`, the `legal_actions` to score.
//! Replies echo the `id` and map outcomes to natural-log probabilities in
//! `logprobs`; `null` stands for zero probability. A `describe` reply
//! instead lists the nonterminal `labels` and the `signature` settings the
//! client must use. Replies may arrive in any order.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{Scorer, ScorerError, SignatureConfig, StateSignature, TabularScorer, UNK};
use crate::transition::{ActionKind, ParserState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Query {
    Describe,
    Actions,
    Word,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub query: Query,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stack_signature: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub legal_actions: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub id: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub logprobs: BTreeMap<String, Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<SignatureConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn encode_lp(lp: f64) -> Option<f64> {
    (lp > f64::NEG_INFINITY).then_some(lp)
}

fn decode_lp(lp: Option<f64>) -> f64 {
    lp.unwrap_or(f64::NEG_INFINITY)
}

struct Conn {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    pending: HashMap<u64, Reply>,
}

type ActionKey = (StateSignature, Vec<ActionKind>);

/// Client side of the protocol.
pub struct ExternalScorer {
    conn: Mutex<Conn>,
    child: Mutex<Option<Child>>,
    next_id: AtomicU64,
    labels: Vec<Arc<str>>,
    signature: SignatureConfig,
    action_cache: Mutex<HashMap<ActionKey, Vec<f64>>>,
    word_cache: Mutex<HashMap<StateSignature, Arc<BTreeMap<String, f64>>>>,
}

impl ExternalScorer {
    /// Talks to a server over the given streams and runs the `describe`
    /// handshake.
    pub fn connect(
        reader: impl BufRead + Send + 'static,
        writer: impl Write + Send + 'static,
    ) -> Result<ExternalScorer, ScorerError> {
        let mut s = ExternalScorer {
            conn: Mutex::new(Conn {
                reader: Box::new(reader),
                writer: Box::new(writer),
                pending: HashMap::new(),
            }),
            child: Mutex::new(None),
            next_id: AtomicU64::new(1),
            labels: Vec::new(),
            signature: SignatureConfig::default(),
            action_cache: Mutex::new(HashMap::new()),
            word_cache: Mutex::new(HashMap::new()),
        };
        let reply = s
            .exchange(vec![Request {
                id: s.fresh_id(),
                query: Query::Describe,
                stack_signature: None,
                legal_actions: Vec::new(),
            }])?
            .remove(0);
        let labels = reply
            .labels
            .ok_or_else(|| ScorerError::Protocol("describe reply lacks `labels`".into()))?;
        s.labels = labels.iter().map(|l| Arc::from(l.as_str())).collect();
        s.signature = reply
            .signature
            .ok_or_else(|| ScorerError::Protocol("describe reply lacks `signature`".into()))?;
        Ok(s)
    }

    /// Starts `program` and talks to it over its stdin and stdout.
    pub fn spawn(program: &str, args: &[String]) -> Result<ExternalScorer, ScorerError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let s = ExternalScorer::connect(BufReader::new(stdout), stdin)?;
        *s.child.lock().unwrap() = Some(child);
        Ok(s)
    }

    fn fresh_id(&self) -> u64 {
        self.next_id.fetch_add(1, Ordering::Relaxed)
    }

    /// Sends all requests, then collects their replies in request order.
    fn exchange(&self, requests: Vec<Request>) -> Result<Vec<Reply>, ScorerError> {
        let mut conn = self.conn.lock().unwrap();
        for r in &requests {
            let line = serde_json::to_string(r).expect("requests serialize");
            writeln!(conn.writer, "{line}")?;
        }
        conn.writer.flush()?;
        let wanted: Vec<u64> = requests.iter().map(|r| r.id).collect();
        let mut out = Vec::with_capacity(wanted.len());
        for id in wanted {
            let reply = loop {
                if let Some(r) = conn.pending.remove(&id) {
                    break r;
                }
                let mut line = String::new();
                if conn.reader.read_line(&mut line)? == 0 {
                    return Err(ScorerError::Protocol("server closed the connection".into()));
                }
                if line.trim().is_empty() {
                    continue;
                }
                let r: Reply = serde_json::from_str(&line)
                    .map_err(|e| ScorerError::Protocol(format!("malformed reply: {e}")))?;
                if !requests.iter().any(|q| q.id == r.id) {
                    return Err(ScorerError::Protocol(format!(
                        "reply for unknown request {}",
                        r.id
                    )));
                }
                conn.pending.insert(r.id, r);
            };
            if let Some(e) = &reply.error {
                return Err(ScorerError::Protocol(format!("server error: {e}")));
            }
            out.push(reply);
        }
        Ok(out)
    }

    fn action_request(&self, sig: &StateSignature, candidates: &[ActionKind]) -> Request {
        Request {
            id: self.fresh_id(),
            query: Query::Actions,
            stack_signature: Some(sig.to_string()),
            legal_actions: candidates.iter().map(|k| k.to_string()).collect(),
        }
    }

    fn decode_actions(candidates: &[ActionKind], reply: &Reply) -> Result<Vec<f64>, ScorerError> {
        candidates
            .iter()
            .map(|k| {
                reply
                    .logprobs
                    .get(&k.to_string())
                    .map(|lp| decode_lp(*lp))
                    .ok_or_else(|| {
                        ScorerError::Protocol(format!("reply {} lacks action {k}", reply.id))
                    })
            })
            .collect()
    }

    fn word_table(&self, state: &ParserState) -> Result<Arc<BTreeMap<String, f64>>, ScorerError> {
        let sig = StateSignature::of(state, &self.signature);
        if let Some(t) = self.word_cache.lock().unwrap().get(&sig) {
            return Ok(t.clone());
        }
        let reply = self
            .exchange(vec![Request {
                id: self.fresh_id(),
                query: Query::Word,
                stack_signature: Some(sig.to_string()),
                legal_actions: Vec::new(),
            }])?
            .remove(0);
        let table: Arc<BTreeMap<String, f64>> = Arc::new(
            reply
                .logprobs
                .into_iter()
                .map(|(w, lp)| (w, decode_lp(lp)))
                .collect(),
        );
        self.word_cache.lock().unwrap().insert(sig, table.clone());
        Ok(table)
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.lock().unwrap().take() {
            // Closing stdin ends the server loop.
            if let Ok(mut conn) = self.conn.lock() {
                conn.writer = Box::new(std::io::sink());
            }
            let _ = child.wait();
        }
    }
}

impl Scorer for ExternalScorer {
    fn nt_labels(&self) -> &[Arc<str>] {
        &self.labels
    }

    fn action_logprobs(
        &self,
        state: &ParserState,
        candidates: &[ActionKind],
    ) -> Result<Vec<f64>, ScorerError> {
        let key = (
            StateSignature::of(state, &self.signature),
            candidates.to_vec(),
        );
        if let Some(v) = self.action_cache.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let reply = self
            .exchange(vec![self.action_request(&key.0, candidates)])?
            .remove(0);
        let v = Self::decode_actions(candidates, &reply)?;
        self.action_cache.lock().unwrap().insert(key, v.clone());
        Ok(v)
    }

    fn prefetch_actions(
        &self,
        batch: &[(&ParserState, Vec<ActionKind>)],
    ) -> Result<(), ScorerError> {
        let mut keys: Vec<ActionKey> = Vec::new();
        {
            let cache = self.action_cache.lock().unwrap();
            for (state, kinds) in batch {
                let key = (StateSignature::of(state, &self.signature), kinds.clone());
                if !cache.contains_key(&key) && !keys.contains(&key) {
                    keys.push(key);
                }
            }
        }
        if keys.is_empty() {
            return Ok(());
        }
        let requests = keys
            .iter()
            .map(|(sig, kinds)| self.action_request(sig, kinds))
            .collect();
        let replies = self.exchange(requests)?;
        let mut cache = self.action_cache.lock().unwrap();
        for (key, reply) in keys.into_iter().zip(replies) {
            let v = Self::decode_actions(&key.1, &reply)?;
            cache.insert(key, v);
        }
        Ok(())
    }

    /// Words missing from the server's table fall back to its `<unk>` entry.
    fn word_logprob(&self, state: &ParserState, word: &str) -> Result<f64, ScorerError> {
        let table = self.word_table(state)?;
        Ok(table
            .get(word)
            .or_else(|| table.get(UNK))
            .copied()
            .unwrap_or(f64::NEG_INFINITY))
    }

    fn word_distribution(&self, state: &ParserState) -> Result<Vec<(String, f64)>, ScorerError> {
        Ok(self
            .word_table(state)?
            .iter()
            .map(|(w, lp)| (w.clone(), *lp))
            .collect())
    }
}

fn answer(scorer: &TabularScorer, line: &str) -> Reply {
    let req: Request = match serde_json::from_str(line) {
        Ok(r) => r,
        Err(e) => {
            return Reply {
                error: Some(format!("malformed request: {e}")),
                ..Reply::default()
            }
        }
    };
    let fail = |msg: String| Reply {
        id: req.id,
        error: Some(msg),
        ..Reply::default()
    };
    let sig = match (&req.query, &req.stack_signature) {
        (Query::Describe, _) => None,
        (_, None) => return fail("missing `stack_signature`".into()),
        (_, Some(s)) => match s.parse::<StateSignature>() {
            Ok(sig) => Some(scorer.normalize_signature(sig)),
            Err(e) => return fail(e.to_string()),
        },
    };
    match req.query {
        Query::Describe => Reply {
            id: req.id,
            labels: Some(scorer.labels().iter().map(|l| l.to_string()).collect()),
            signature: Some(*scorer.signature_config()),
            ..Reply::default()
        },
        Query::Actions => {
            let kinds: Result<Vec<ActionKind>, _> =
                req.legal_actions.iter().map(|a| a.parse()).collect();
            let kinds = match kinds {
                Ok(k) if !k.is_empty() => k,
                Ok(_) => return fail("empty `legal_actions`".into()),
                Err(e) => return fail(format!("{e}")),
            };
            let sig = sig.expect("checked above");
            let lps = scorer.action_logprobs_at(&sig, &kinds);
            Reply {
                id: req.id,
                logprobs: kinds
                    .iter()
                    .map(|k| k.to_string())
                    .zip(lps.into_iter().map(encode_lp))
                    .collect(),
                ..Reply::default()
            }
        }
        Query::Word => Reply {
            id: req.id,
            logprobs: scorer
                .word_distribution_at(&sig.expect("checked above"))
                .into_iter()
                .map(|(w, lp)| (w, encode_lp(lp)))
                .collect(),
            ..Reply::default()
        },
    }
}

/// Answers protocol requests from `reader` until end of input.
pub fn serve(
    scorer: &TabularScorer,
    reader: impl BufRead,
    mut writer: impl Write,
) -> std::io::Result<()> {
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = answer(scorer, &line);
        writeln!(
            writer,
            "{}",
            serde_json::to_string(&reply).expect("replies serialize")
        )?;
        writer.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::FitConfig;
    use crate::transition::{replay, Action, Strategy};
    use crate::treebank::Treebank;
    use std::thread;

    fn scorer() -> TabularScorer {
        let tb = Treebank::parse(
            "(S (NP the dog) (VP barked))\n(S (NP the cat) (VP slept))\n",
            "t",
        )
        .unwrap();
        let cfg = FitConfig {
            min_word_count: 1,
            ..FitConfig::default()
        };
        TabularScorer::fit(&tb, Strategy::TopDown, &cfg).unwrap()
    }

    fn connected(local: TabularScorer) -> ExternalScorer {
        let (req_r, req_w) = std::io::pipe().unwrap();
        let (rep_r, rep_w) = std::io::pipe().unwrap();
        thread::spawn(move || serve(&local, BufReader::new(req_r), rep_w).unwrap());
        ExternalScorer::connect(BufReader::new(rep_r), req_w).unwrap()
    }

    #[test]
    fn external_matches_local() {
        let local = scorer();
        let remote = connected(local.clone());
        assert_eq!(remote.nt_labels(), local.nt_labels());
        let state = replay(
            &[Action::nt("S"), Action::nt("NP"), Action::shift("the")],
            Strategy::TopDown,
        )
        .unwrap();
        let kinds: Vec<ActionKind> = ["NT(NP)", "NT(S)", "NT(VP)", "SHIFT", "REDUCE"]
            .iter()
            .map(|k| k.parse().unwrap())
            .collect();
        assert_eq!(
            remote.action_logprobs(&state, &kinds).unwrap(),
            local.action_logprobs(&state, &kinds).unwrap()
        );
        for w in ["dog", "cat", "zebra"] {
            assert_eq!(
                remote.word_logprob(&state, w).unwrap(),
                local.word_logprob(&state, w).unwrap()
            );
        }
    }

    #[test]
    fn tolerates_out_of_order_replies() {
        let local = scorer();
        let (req_r, req_w) = std::io::pipe().unwrap();
        let (rep_r, mut rep_w) = std::io::pipe().unwrap();
        thread::spawn(move || {
            let mut lines = BufReader::new(req_r).lines();
            let hello = lines.next().unwrap().unwrap();
            writeln!(
                rep_w,
                "{}",
                serde_json::to_string(&answer(&local, &hello)).unwrap()
            )
            .unwrap();
            let a = lines.next().unwrap().unwrap();
            let b = lines.next().unwrap().unwrap();
            for l in [b, a] {
                writeln!(
                    rep_w,
                    "{}",
                    serde_json::to_string(&answer(&local, &l)).unwrap()
                )
                .unwrap();
            }
        });
        let remote = ExternalScorer::connect(BufReader::new(rep_r), req_w).unwrap();
        let s1 = replay(&[Action::nt("S")], Strategy::TopDown).unwrap();
        let s2 = replay(&[Action::nt("S"), Action::nt("NP")], Strategy::TopDown).unwrap();
        let k1: Vec<ActionKind> = vec!["NT(NP)".parse().unwrap(), ActionKind::Shift];
        let k2: Vec<ActionKind> = vec![ActionKind::Shift];
        remote
            .prefetch_actions(&[(&s1, k1.clone()), (&s2, k2.clone())])
            .unwrap();
        let local = scorer();
        assert_eq!(
            remote.action_logprobs(&s1, &k1).unwrap(),
            local.action_logprobs(&s1, &k1).unwrap()
        );
        assert_eq!(remote.action_logprobs(&s2, &k2).unwrap(), vec![0.0]);
    }

    #[test]
    fn server_reports_bad_requests() {
        let local = scorer();
        let r = answer(&local, "not json");
        assert!(r.error.is_some());
        let r = answer(
            &local,
            r##"{"id":4,"query":"actions","stack_signature":"# # #|0"}"##,
        );
        assert_eq!(r.id, 4);
        assert!(r.error.is_some());
        let r = answer(
            &local,
            r##"{"id":5,"query":"word","stack_signature":"bogus"}"##,
        );
        assert!(r.error.is_some());
        let r = answer(
            &local,
            r##"{"id":6,"query":"actions","stack_signature":"# # #|0","legal_actions":["NT(S)"]}"##,
        );
        assert_eq!(r.logprobs.get("NT(S)"), Some(&Some(0.0)));
    }
}
