//! The four monitoring services and the transports that connect them.
//!
//! Messages travel around a ring: driver → tracker → verifier → manager →
//! reset controller → driver. Every service is a sequential reactor over its
//! inbound stream and shares no state with the others, so the outcome of an
//! episode depends only on the messages the driver sends, not on the
//! transport or thread timing.

use std::collections::{BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, ErrorKind, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use log::warn;
use serde::{Deserialize, Serialize};

use super::manager::{EpisodeManager, ManagerEvent, ManagerOutput};
use super::reset::ResetController;
use super::tracker::Tracker;
use super::types::{EpisodeOutcome, LifecycleCommand, TaskTarget, TrackBatch};
use super::verifier::{Verifier, VerifierConfig, VerifierInput};
use super::wire::{write_message, Body, Source, StreamDecoder, WireMessage};
use crate::error::{Error, Result};
use crate::sim::{FramePayload, SensorFrame, SuccessModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportKind {
    /// Services called one after another on the caller's thread.
    Inline,
    /// One thread per service, connected by channels.
    InProcess,
    /// One thread per service, connected by local TCP streams carrying the
    /// line protocol.
    Socket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub confirm_frames: u32,
    pub timeout_s: f64,
    pub transport: TransportKind,
    pub sigma_obs: f64,
    pub socket_host: String,
    /// First port of the five ring hops; 0 picks ephemeral ports.
    pub socket_base_port: u16,
    /// How long the driver waits for an outcome before declaring the
    /// transport failed.
    pub io_timeout_ms: u64,
    pub lag_budget_ms: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            confirm_frames: 5,
            timeout_s: 30.0,
            transport: TransportKind::InProcess,
            sigma_obs: 0.0005,
            socket_host: "127.0.0.1".into(),
            socket_base_port: 0,
            io_timeout_ms: 5_000,
            lag_budget_ms: 50.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.confirm_frames == 0 {
            return Err(Error::validation("pipeline.confirm_frames", "must be at least 1"));
        }
        if !(self.timeout_s.is_finite() && self.timeout_s > 0.0) {
            return Err(Error::validation("pipeline.timeout_s", "must be positive"));
        }
        if !(self.sigma_obs.is_finite() && self.sigma_obs >= 0.0) {
            return Err(Error::validation("pipeline.sigma_obs", "must be non-negative"));
        }
        if self.io_timeout_ms == 0 {
            return Err(Error::validation("pipeline.io_timeout_ms", "must be positive"));
        }
        if !(self.lag_budget_ms.is_finite() && self.lag_budget_ms > 0.0) {
            return Err(Error::validation("pipeline.lag_budget_ms", "must be positive"));
        }
        Ok(())
    }
}

/// A message-driven service.
pub trait Service: Send {
    fn source(&self) -> Source;
    fn handle(&mut self, msg: WireMessage) -> Result<Vec<WireMessage>>;
}

#[derive(Debug, Default)]
struct SeqCounter(HashMap<u64, u64>);

impl SeqCounter {
    fn next(&mut self, episode_id: u64) -> u64 {
        let c = self.0.entry(episode_id).or_insert(0);
        *c += 1;
        *c - 1
    }
}

/// Drops redelivered messages: per `(source, episode)` sequence numbers must
/// strictly increase.
struct Deduped<S> {
    inner: S,
    last: HashMap<(Source, u64), u64>,
}

impl<S: Service> Service for Deduped<S> {
    fn source(&self) -> Source {
        self.inner.source()
    }

    fn handle(&mut self, msg: WireMessage) -> Result<Vec<WireMessage>> {
        let key = (msg.source, msg.episode_id);
        if self.last.get(&key).is_some_and(|&s| msg.seq <= s) {
            return Ok(Vec::new());
        }
        self.last.insert(key, msg.seq);
        self.inner.handle(msg)
    }
}

fn deduped<S: Service + 'static>(inner: S) -> Box<dyn Service> {
    Box::new(Deduped {
        inner,
        last: HashMap::new(),
    })
}

#[derive(Default)]
pub struct TrackerService {
    tracker: Tracker,
}

impl Service for TrackerService {
    fn source(&self) -> Source {
        Source::Tracker
    }

    fn handle(&mut self, msg: WireMessage) -> Result<Vec<WireMessage>> {
        match (&msg.body, msg.source) {
            (Body::Sensor(_), Source::Bottom) => {
                let frame = msg.as_frame().expect("bottom sensor message");
                let updates = self.tracker.track_objects(&frame)?;
                if updates.is_empty() {
                    return Ok(Vec::new());
                }
                Ok(vec![WireMessage {
                    seq: frame.seq,
                    episode_id: frame.episode_id,
                    t: frame.t,
                    source: Source::Tracker,
                    body: Body::Track(TrackBatch {
                        frame_seq: frame.seq,
                        updates,
                    }),
                }])
            }
            (Body::Sensor(_), Source::Top) => Ok(Vec::new()),
            (Body::Command(LifecycleCommand::ResetDone), _) => {
                self.tracker.forget(msg.episode_id);
                Ok(vec![msg])
            }
            _ => Ok(vec![msg]),
        }
    }
}

pub struct VerifierService {
    verifier: Verifier,
    seq: SeqCounter,
}

impl VerifierService {
    pub fn new(config: VerifierConfig) -> Self {
        Self {
            verifier: Verifier::new(config),
            seq: SeqCounter::default(),
        }
    }

    fn wrap(&mut self, verdicts: Vec<super::types::VerdictEvent>) -> impl Iterator<Item = WireMessage> + '_ {
        verdicts.into_iter().map(|v| WireMessage {
            seq: self.seq.next(v.episode_id),
            episode_id: v.episode_id,
            t: v.t,
            source: Source::Verifier,
            body: Body::Verdict(v),
        })
    }
}

impl Service for VerifierService {
    fn source(&self) -> Source {
        Source::Verifier
    }

    fn handle(&mut self, msg: WireMessage) -> Result<Vec<WireMessage>> {
        let ep = msg.episode_id;
        match &msg.body {
            Body::Command(LifecycleCommand::Start { .. }) => {
                let verdicts = self.verifier.start(ep);
                let mut out = vec![msg];
                out.extend(self.wrap(verdicts));
                Ok(out)
            }
            Body::Command(
                LifecycleCommand::SequenceComplete | LifecycleCommand::Fault | LifecycleCommand::Timeout,
            ) => {
                self.verifier.close(ep);
                Ok(vec![msg])
            }
            Body::Track(batch) => {
                let verdicts = self.verifier.verify(VerifierInput::Tracks(batch.clone()));
                Ok(self.wrap(verdicts).collect())
            }
            Body::Sensor(FramePayload::Proprio { state }) => {
                let verdicts = self.verifier.verify(VerifierInput::Proprio {
                    episode_id: ep,
                    seq: msg.seq,
                    t: msg.t,
                    state: *state,
                });
                Ok(self.wrap(verdicts).collect())
            }
            Body::Sensor(_) => Ok(Vec::new()),
            _ => Ok(vec![msg]),
        }
    }
}

#[derive(Default)]
pub struct ManagerService {
    manager: EpisodeManager,
    seq: SeqCounter,
}

impl Service for ManagerService {
    fn source(&self) -> Source {
        Source::Manager
    }

    fn handle(&mut self, msg: WireMessage) -> Result<Vec<WireMessage>> {
        let event = match msg.body {
            Body::Verdict(v) => ManagerEvent::Verdict(v),
            Body::Command(LifecycleCommand::Start { target, deadline_s }) => {
                ManagerEvent::Start { target, deadline_s }
            }
            Body::Command(LifecycleCommand::SequenceComplete) => ManagerEvent::SequenceComplete,
            Body::Command(LifecycleCommand::Fault) => ManagerEvent::Fault,
            Body::Command(LifecycleCommand::Timeout) => ManagerEvent::Timeout,
            Body::Command(LifecycleCommand::ResetDone) => ManagerEvent::ResetDone,
            _ => return Ok(Vec::new()),
        };
        let outputs = self.manager.handle(msg.episode_id, msg.t, event)?;
        Ok(outputs
            .into_iter()
            .map(|o| {
                let (episode_id, t, body) = match o {
                    ManagerOutput::Outcome(o) => (o.episode_id, o.t, Body::Outcome(o)),
                    ManagerOutput::ResetRequest { episode_id, t } => {
                        (episode_id, t, Body::Command(LifecycleCommand::ResetRequest))
                    }
                };
                WireMessage {
                    seq: self.seq.next(episode_id),
                    episode_id,
                    t,
                    source: Source::Manager,
                    body,
                }
            })
            .collect())
    }
}

#[derive(Default)]
pub struct ResetService {
    controller: ResetController,
    seq: SeqCounter,
}

impl Service for ResetService {
    fn source(&self) -> Source {
        Source::Reset
    }

    fn handle(&mut self, msg: WireMessage) -> Result<Vec<WireMessage>> {
        match msg.body {
            Body::Outcome(_) => Ok(vec![msg]),
            Body::Command(LifecycleCommand::ResetRequest) => Ok(self
                .controller
                .on_request(msg.episode_id)
                .map(|cmd| {
                    WireMessage::command(Source::Reset, self.seq.next(msg.episode_id), msg.episode_id, msg.t, cmd)
                })
                .into_iter()
                .collect()),
            _ => Ok(Vec::new()),
        }
    }
}

/// Fresh tracker, verifier, manager and reset services, in ring order.
pub fn build_services(verifier: VerifierConfig) -> Vec<Box<dyn Service>> {
    vec![
        deduped(TrackerService::default()),
        deduped(VerifierService::new(verifier)),
        deduped(ManagerService::default()),
        deduped(ResetService::default()),
    ]
}

/// The services called synchronously in ring order.
pub struct InlineChain {
    services: Vec<Box<dyn Service>>,
}

impl InlineChain {
    pub fn new(verifier: VerifierConfig) -> Self {
        Self {
            services: build_services(verifier),
        }
    }

    /// Push one driver message through every service; returns what reaches
    /// the driver.
    pub fn push(&mut self, msg: WireMessage) -> Vec<WireMessage> {
        let mut batch = vec![msg];
        for svc in &mut self.services {
            let mut next = Vec::new();
            for m in batch {
                match svc.handle(m) {
                    Ok(out) => next.extend(out),
                    Err(e) => warn!("{:?} service: {e}", svc.source()),
                }
            }
            batch = next;
        }
        batch
    }
}

trait Outbox: Send {
    fn send(&mut self, msg: &WireMessage) -> Result<()>;
}

trait Inbox: Send {
    /// `Ok(None)` once the upstream side has closed.
    fn recv(&mut self, timeout: Option<Duration>) -> Result<Option<WireMessage>>;
}

impl Outbox for Sender<WireMessage> {
    fn send(&mut self, msg: &WireMessage) -> Result<()> {
        Sender::send(self, msg.clone()).map_err(|_| Error::Transport("channel closed".into()))
    }
}

impl Inbox for Receiver<WireMessage> {
    fn recv(&mut self, timeout: Option<Duration>) -> Result<Option<WireMessage>> {
        match timeout {
            None => Ok(Receiver::recv(self).ok()),
            Some(d) => match self.recv_timeout(d) {
                Ok(m) => Ok(Some(m)),
                Err(RecvTimeoutError::Disconnected) => Ok(None),
                Err(RecvTimeoutError::Timeout) => Err(Error::Transport("timed out waiting for message".into())),
            },
        }
    }
}

struct SocketOut(BufWriter<TcpStream>);

impl Outbox for SocketOut {
    fn send(&mut self, msg: &WireMessage) -> Result<()> {
        write_message(&mut self.0, msg).map_err(|e| Error::Transport(e.to_string()))?;
        self.0.flush().map_err(|e| Error::Transport(e.to_string()))
    }
}

impl Drop for SocketOut {
    fn drop(&mut self) {
        let _ = self.0.flush();
        let _ = self.0.get_ref().shutdown(std::net::Shutdown::Write);
    }
}

struct SocketIn {
    stream: TcpStream,
    decoder: StreamDecoder<BufReader<TcpStream>>,
}

impl Inbox for SocketIn {
    fn recv(&mut self, timeout: Option<Duration>) -> Result<Option<WireMessage>> {
        self.stream
            .set_read_timeout(timeout)
            .map_err(|e| Error::Transport(e.to_string()))?;
        loop {
            match self.decoder.next() {
                None => return Ok(None),
                Some(Ok(m)) => return Ok(Some(m)),
                Some(Err(e @ Error::Protocol { .. })) => warn!("dropping malformed line: {e}"),
                Some(Err(Error::Io(e))) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                    return Err(Error::Transport("timed out waiting for message".into()))
                }
                Some(Err(e)) => return Err(Error::Transport(e.to_string())),
            }
        }
    }
}

fn socket_hop(host: &str, port: u16) -> Result<(SocketOut, SocketIn)> {
    let transport = |e: std::io::Error| Error::Transport(e.to_string());
    let listener = TcpListener::bind((host, port)).map_err(transport)?;
    let addr = listener.local_addr().map_err(transport)?;
    let client = TcpStream::connect(addr).map_err(transport)?;
    let (server, _) = listener.accept().map_err(transport)?;
    client.set_nodelay(true).map_err(transport)?;
    let reader = server.try_clone().map_err(transport)?;
    Ok((
        SocketOut(BufWriter::new(client)),
        SocketIn {
            stream: server,
            decoder: StreamDecoder::new(BufReader::new(reader)),
        },
    ))
}

fn serve(mut svc: Box<dyn Service>, mut inbox: Box<dyn Inbox>, mut outbox: Box<dyn Outbox>) {
    loop {
        let msg = match inbox.recv(None) {
            Ok(Some(m)) => m,
            Ok(None) => return,
            Err(e) => {
                warn!("{:?} service: {e}", svc.source());
                return;
            }
        };
        match svc.handle(msg) {
            Ok(out) => {
                for m in &out {
                    if outbox.send(m).is_err() {
                        return;
                    }
                }
            }
            Err(e) => warn!("{:?} service: {e}", svc.source()),
        }
    }
}

struct Threaded {
    tx: Option<Box<dyn Outbox>>,
    rx: Box<dyn Inbox>,
    handles: Vec<JoinHandle<()>>,
}

impl Threaded {
    fn spawn(kind: TransportKind, config: &PipelineConfig, verifier: VerifierConfig) -> Result<Self> {
        let mut outs: Vec<Box<dyn Outbox>> = Vec::new();
        let mut ins: Vec<Box<dyn Inbox>> = Vec::new();
        for hop in 0..5u16 {
            match kind {
                TransportKind::Socket => {
                    let port = match config.socket_base_port {
                        0 => 0,
                        base => base + hop,
                    };
                    let (o, i) = socket_hop(&config.socket_host, port)?;
                    outs.push(Box::new(o));
                    ins.push(Box::new(i));
                }
                _ => {
                    let (o, i) = mpsc::channel::<WireMessage>();
                    outs.push(Box::new(o));
                    ins.push(Box::new(i));
                }
            }
        }
        let mut outs = outs.into_iter();
        let mut ins = ins.into_iter();
        let tx = outs.next();
        let mut handles = Vec::new();
        for svc in build_services(verifier) {
            let inbox = ins.next().expect("hop");
            let outbox = outs.next().expect("hop");
            handles.push(std::thread::spawn(move || serve(svc, inbox, outbox)));
        }
        Ok(Self {
            tx,
            rx: ins.next().expect("return hop"),
            handles,
        })
    }

    fn shutdown(mut self) {
        self.tx = None;
        // Closing the first hop cascades around the ring.
        while let Ok(Some(_)) = self.rx.recv(Some(Duration::from_millis(500))) {}
        for h in self.handles {
            let _ = h.join();
        }
    }
}

enum Link {
    Inline(InlineChain),
    Threaded(Threaded),
}

/// Failures to inject into the transport, for testing.
#[derive(Debug, Clone, Default)]
pub struct FaultPlan {
    /// Episodes during which the driver's connection is cut halfway through.
    pub sever: BTreeSet<u64>,
}

/// What the driver sends for one episode.
#[derive(Debug, Clone)]
pub struct EpisodeFeed {
    pub episode_id: u64,
    pub target: TaskTarget,
    pub frames: Vec<SensorFrame>,
    /// Episode time at which the motion sequence ended.
    pub end_t: f64,
    /// The robot could not execute its plan.
    pub fault: bool,
}

#[derive(Debug, Clone)]
pub struct Monitored {
    pub outcome: EpisodeOutcome,
    /// Time from the driver's last message for the episode to receipt of the
    /// outcome.
    pub lag: Duration,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PipelineStats {
    pub episodes: usize,
    pub infrastructure_failures: usize,
    pub max_lag_s: f64,
    pub over_budget: usize,
}

/// What the driver sends for an episode: the start command, the frames and
/// the end-of-sequence (or fault) command, plus the reset-done command sent
/// once the reset has been carried out.
pub fn driver_messages(feed: &EpisodeFeed, timeout_s: f64) -> (Vec<WireMessage>, WireMessage) {
    let ep = feed.episode_id;
    let mut seq = 0u64;
    let mut command = |t: f64, cmd: LifecycleCommand| {
        seq += 1;
        WireMessage::command(Source::Driver, seq - 1, ep, t, cmd)
    };
    let t0 = feed.frames.first().map_or(0.0, |f| f.t);
    let mut inputs = vec![command(
        t0,
        LifecycleCommand::Start {
            target: feed.target,
            deadline_s: timeout_s,
        },
    )];
    inputs.extend(feed.frames.iter().cloned().map(WireMessage::from_frame));
    let end = if feed.fault {
        LifecycleCommand::Fault
    } else {
        LifecycleCommand::SequenceComplete
    };
    inputs.push(command(feed.end_t, end));
    let done = command(feed.end_t, LifecycleCommand::ResetDone);
    (inputs, done)
}

/// The driver's end of the monitoring ring.
pub struct Pipeline {
    config: PipelineConfig,
    verifier: VerifierConfig,
    link: Option<Link>,
    log: Option<BufWriter<File>>,
    faults: FaultPlan,
    stats: PipelineStats,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, model: SuccessModel, cube_edge: f64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            verifier: VerifierConfig {
                confirm_frames: config.confirm_frames,
                model,
                cube_edge,
            },
            config,
            link: None,
            log: None,
            faults: FaultPlan::default(),
            stats: PipelineStats::default(),
        })
    }

    /// Append every message the driver sends or receives to `path`.
    pub fn with_log(mut self, path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        self.log = Some(BufWriter::new(file));
        Ok(self)
    }

    pub fn with_faults(mut self, faults: FaultPlan) -> Self {
        self.faults = faults;
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn stats(&self) -> &PipelineStats {
        &self.stats
    }

    fn log(&mut self, msg: &WireMessage) -> Result<()> {
        if let Some(log) = &mut self.log {
            write_message(log, msg)?;
        }
        Ok(())
    }

    fn link(&mut self) -> Result<&mut Link> {
        if self.link.is_none() {
            self.link = Some(match self.config.transport {
                TransportKind::Inline => Link::Inline(InlineChain::new(self.verifier)),
                kind => Link::Threaded(Threaded::spawn(kind, &self.config, self.verifier)?),
            });
        }
        Ok(self.link.as_mut().expect("link"))
    }

    fn teardown(&mut self) {
        if let Some(Link::Threaded(t)) = self.link.take() {
            t.shutdown();
        }
    }

    /// Run one episode's messages through the services, perform the ordered
    /// reset, and return the outcome. Transport failures produce an
    /// infrastructure-failure outcome and a fresh set of services.
    pub fn monitor(&mut self, feed: &EpisodeFeed, reset: &mut dyn FnMut() -> Result<()>) -> Result<Monitored> {
        let ep = feed.episode_id;
        let (inputs, done) = driver_messages(feed, self.config.timeout_s);
        let sever_at = self.faults.sever.contains(&ep).then_some(inputs.len() / 2);

        let result = self.exchange(ep, &inputs, done, sever_at, reset);
        self.stats.episodes += 1;
        let monitored = match result {
            Ok(m) => m,
            Err(Error::Transport(e)) => {
                warn!("episode {ep}: transport failure: {e}");
                self.teardown();
                self.stats.infrastructure_failures += 1;
                let outcome = EpisodeOutcome::infrastructure(ep, feed.end_t);
                self.log(&WireMessage {
                    seq: u64::MAX,
                    episode_id: ep,
                    t: feed.end_t,
                    source: Source::Driver,
                    body: Body::Outcome(outcome),
                })?;
                // The scene still has to be restored for the next attempt.
                reset()?;
                Monitored {
                    outcome,
                    lag: Duration::ZERO,
                }
            }
            Err(e) => return Err(e),
        };
        let lag = monitored.lag.as_secs_f64();
        self.stats.max_lag_s = self.stats.max_lag_s.max(lag);
        if lag * 1e3 > self.config.lag_budget_ms {
            self.stats.over_budget += 1;
        }
        if let Some(log) = &mut self.log {
            log.flush()?;
        }
        Ok(monitored)
    }

    fn exchange(
        &mut self,
        ep: u64,
        inputs: &[WireMessage],
        done: WireMessage,
        sever_at: Option<usize>,
        reset: &mut dyn FnMut() -> Result<()>,
    ) -> Result<Monitored> {
        for m in inputs.iter().take(sever_at.unwrap_or(usize::MAX)) {
            self.log(m)?;
        }
        let io_timeout = Duration::from_millis(self.config.io_timeout_ms);
        let mut outcome = None;
        let mut lag = Duration::ZERO;
        match self.link()? {
            Link::Inline(chain) => {
                if sever_at.is_some() {
                    return Err(Error::Transport("connection severed".into()));
                }
                let mut received = Vec::new();
                let mut sent_at = Instant::now();
                for m in inputs {
                    sent_at = Instant::now();
                    received.extend(chain.push(m.clone()));
                }
                lag = sent_at.elapsed();
                let mut ordered = false;
                for m in &received {
                    match &m.body {
                        Body::Outcome(o) if o.episode_id == ep => outcome = Some(*o),
                        Body::Command(LifecycleCommand::ResetOrder) if m.episode_id == ep => ordered = true,
                        _ => {}
                    }
                }
                for m in &received {
                    self.log(m)?;
                }
                let Some(outcome) = outcome else {
                    return Err(Error::Transport("pipeline produced no outcome".into()));
                };
                if ordered {
                    reset()?;
                    self.log(&done)?;
                    let Some(Link::Inline(chain)) = &mut self.link else { unreachable!() };
                    chain.push(done);
                }
                return Ok(Monitored { outcome, lag });
            }
            Link::Threaded(t) => {
                let mut sent_at = Instant::now();
                for (i, m) in inputs.iter().enumerate() {
                    if sever_at == Some(i) {
                        t.tx = None;
                        break;
                    }
                    let tx = t.tx.as_mut().ok_or_else(|| Error::Transport("link closed".into()))?;
                    tx.send(m)?;
                    sent_at = Instant::now();
                }
                let mut received = Vec::new();
                loop {
                    let Some(m) = t.rx.recv(Some(io_timeout))? else {
                        return Err(Error::Transport("connection closed".into()));
                    };
                    if m.episode_id != ep {
                        continue;
                    }
                    match &m.body {
                        Body::Outcome(o) => {
                            if outcome.is_none() {
                                lag = sent_at.elapsed();
                            }
                            outcome = Some(*o);
                        }
                        Body::Command(LifecycleCommand::ResetOrder) => {
                            received.push(m);
                            break;
                        }
                        _ => {}
                    }
                    received.push(m);
                }
                let Some(outcome) = outcome else {
                    return Err(Error::Transport("reset ordered without outcome".into()));
                };
                reset()?;
                let tx = t.tx.as_mut().ok_or_else(|| Error::Transport("link closed".into()))?;
                tx.send(&done)?;
                for m in &received {
                    self.log(m)?;
                }
                self.log(&done)?;
                Ok(Monitored { outcome, lag })
            }
        }
    }
}

impl Drop for Pipeline {
    fn drop(&mut self) {
        self.teardown();
        if let Some(log) = &mut self.log {
            let _ = log.flush();
        }
    }
}

/// A simulator the driver can run episodes on.
pub trait SimHandle {
    fn run_episode(&mut self, episode_id: u64) -> Result<EpisodeFeed>;
    fn reset(&mut self) -> Result<()>;
}

/// Monitor a sequence of episodes; one outcome per episode, in order.
pub fn run_services(
    pipeline: &mut Pipeline,
    sim: &mut dyn SimHandle,
    episodes: impl IntoIterator<Item = u64>,
) -> Result<Vec<EpisodeOutcome>> {
    let mut outcomes = Vec::new();
    for ep in episodes {
        let feed = sim.run_episode(ep)?;
        let m = pipeline.monitor(&feed, &mut || sim.reset())?;
        outcomes.push(m.outcome);
    }
    Ok(outcomes)
}
