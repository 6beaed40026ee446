use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cellular::{bs_end, midpoint_threshold, trackside_chain};
use super::{
    compute_delay, DelayPath, DeliveryRecord, EngineError, EventKind, EventRecord, FlowRecord,
    FlowTally, LinkRecord, Record, Route, SimulationClock, Summary,
};
use crate::channel::{sample_link, Antenna, ChannelParams, ChannelSample, LinkKind, RadioEnd};
use crate::ids::{EntityId, StationId, TrackId, TrainId, UavId};
use crate::link_protocol::{
    a2a_failover, at_floor, bytes_per_tick, dispatch, evaluate_handover, execute_handover,
    flight_change, handover_modes, land, needs_replacement, select_spare, update_rssi_window,
    vertical_handover, AssociationTable, FlightChangeOutcome, FlightChangePolicy,
    HandoverDecision, HandoverExecution, LinkState, LinkStatus, LinkThresholds, Neighbor,
    ProtocolParams, RelayBuffer, StationNetwork, Uplink, VerticalChange,
};
use crate::resource::{
    access_schemes, build_frequency_plan, predict_position, AccessRequest, AccessScheme,
    Allocation, FrequencyPlan, ServedLink,
};
use crate::scenario::{DelayParams, Fault, FaultKind, FlowSpec, Mode, RadioParams, Scenario};
use crate::time::{Duration, SimTime};
use crate::world::{
    advance_train, charge_flight, tracking_controllers, uav_tracking_step, GroundStation, Point3,
    TrackPath, TrackingController, TrackingParams, TrainKinematics, TrainState, UavState,
};

type LinkKey = (EntityId, EntityId);

/// Protocol state of one mobile end's connection to the fixed network: a
/// UAV in UAS-R mode, a train in baseline mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Attachment {
    pub status: LinkStatus,
    pub entered: SimTime,
    pub last_handover: Option<SimTime>,
    /// Nothing moves on the link before this instant.
    pub gap_until: SimTime,
    /// Start of the current run of direct-link qualification while relayed.
    pub qualified_since: Option<SimTime>,
}

impl Attachment {
    fn new(now: SimTime) -> Self {
        Attachment {
            status: LinkStatus::Interrupted,
            entered: now,
            last_handover: None,
            gap_until: SimTime::ZERO,
            qualified_since: None,
        }
    }
}

#[derive(Debug, Clone)]
struct FlowState {
    spec: FlowSpec,
    tally: FlowTally,
    cum_bits: f64,
    generated: u64,
}

struct PathInfo {
    route: Route,
    status: LinkStatus,
    capacity: f64,
    path: Option<DelayPath>,
    gap: bool,
}

impl PathInfo {
    fn none() -> Self {
        PathInfo {
            route: Route::None,
            status: LinkStatus::Interrupted,
            capacity: 0.0,
            path: None,
            gap: false,
        }
    }
}

pub struct Simulation {
    mode: Mode,
    clock: SimulationClock,
    channel: ChannelParams,
    protocol: ProtocolParams,
    radio: RadioParams,
    tracking: TrackingParams,
    delay: DelayParams,
    kinematics: TrainKinematics,
    policy: FlightChangePolicy,
    thresholds: LinkThresholds,
    entry_dbm: f64,
    cellular_train_gain: f64,
    slot: Duration,
    tracks: BTreeMap<TrackId, TrackPath>,
    trains: BTreeMap<TrainId, TrainState>,
    train_height: BTreeMap<TrainId, f64>,
    uavs: BTreeMap<UavId, UavState>,
    stations: BTreeMap<StationId, GroundStation>,
    networks: Vec<StationNetwork>,
    faults: Vec<Fault>,
    controller: Box<dyn TrackingController>,
    access: Box<dyn AccessScheme>,
    exec: Box<dyn HandoverExecution>,
    assoc: AssociationTable,
    links: BTreeMap<LinkKey, LinkState>,
    samples: BTreeMap<LinkKey, ChannelSample>,
    attach: BTreeMap<EntityId, Attachment>,
    plan: FrequencyPlan,
    alloc: Allocation,
    flows: Vec<FlowState>,
    buffers: BTreeMap<TrainId, RelayBuffer>,
    vertical: BTreeMap<TrainId, u32>,
    no_spare: BTreeSet<UavId>,
    rng: ChaCha8Rng,
    events: BTreeMap<EventKind, u64>,
    out: Vec<Record>,
}

fn label(up: Option<Uplink>) -> Option<String> {
    up.map(|u| u.to_string())
}

impl Simulation {
    /// Builds the initial state from a validated scenario and performs the
    /// t = 0 measurement, attachment and allocation.
    pub fn new(sc: &Scenario, seed: u64) -> Result<Self, EngineError> {
        let w = &sc.world;
        let mut tracks = BTreeMap::new();
        for t in &w.tracks {
            let p = TrackPath::new(t.id, t.vertices.clone(), t.stations.clone(), t.labels.clone())?;
            tracks.insert(t.id, p);
        }
        let mut trains = BTreeMap::new();
        let mut train_height = BTreeMap::new();
        for t in &w.trains {
            trains.insert(
                t.id,
                TrainState {
                    id: t.id,
                    track: t.track,
                    position: t.position,
                    speed: t.speed.unwrap_or(t.cruise_speed),
                    direction: t.direction,
                    dwell_remaining: 0.0,
                    cruise_speed: t.cruise_speed,
                    stops_at_stations: t.stops_at_stations,
                    last_station: None,
                },
            );
            train_height.insert(t.id, t.antenna_height);
        }

        let mut assoc = AssociationTable::new();
        let mut uavs = BTreeMap::new();
        let mut stations = BTreeMap::new();
        let mut thresholds = LinkThresholds {
            sensitivity_dbm: sc.channel.receiver_sensitivity_dbm,
            min_sinr_db: sc.channel.min_sinr_db,
            handover_threshold_dbm: sc.protocol.handover_threshold_dbm,
        };
        match sc.mode {
            Mode::Uasr => {
                let d = &w.uav_defaults;
                for u in &w.uavs {
                    let alt = u.altitude.unwrap_or(d.altitude);
                    let endurance = u.endurance.unwrap_or(d.endurance).millis();
                    let range = u.range_m.unwrap_or(d.range_m);
                    let mut state = UavState {
                        id: u.id,
                        position: Point3::ZERO,
                        velocity: Point3::ZERO,
                        altitude_setpoint: alt,
                        max_speed: u.max_speed.unwrap_or(d.max_speed),
                        endurance_ms: endurance,
                        endurance_total_ms: endurance,
                        range_remaining: range,
                        range_total: range,
                        served_train: None,
                        replacement_inbound: false,
                        airborne: false,
                        locked: false,
                    };
                    match u.serves.and_then(|t| trains.get(&t)) {
                        Some(train) => {
                            let track = &tracks[&train.track];
                            let aim = track.point_at(train.position).with_height(alt);
                            state.position = u.position.map_or(aim, |p| p.with_height(alt));
                            let off = aim - state.position;
                            state.locked = off.horizontal_norm() <= sc.tracking.lock_tolerance
                                && off.z.abs() <= sc.tracking.lock_tolerance;
                            if state.locked {
                                state.velocity = train.velocity(track);
                            }
                            state.airborne = true;
                            state.served_train = Some(train.id);
                            assoc.assign(train.id, u.id)?;
                        }
                        None => {
                            state.position = u.position.unwrap_or_default().with_height(0.0);
                        }
                    }
                    uavs.insert(u.id, state);
                }
                for g in &w.ground_stations {
                    let gs = GroundStation::new(
                        g.id,
                        g.position,
                        g.antenna_height,
                        g.tx_power_dbm,
                        g.beamwidth_deg,
                        g.peak_gain_dbi,
                    )?;
                    stations.insert(g.id, gs);
                }
            }
            Mode::CellularBaseline => {
                for bs in trackside_chain(&tracks, &sc.cellular)? {
                    stations.insert(bs.id, bs);
                }
                let auto = match (tracks.values().next(), w.trains.first()) {
                    (Some(track), train) => midpoint_threshold(
                        track,
                        &sc.cellular,
                        &sc.channel,
                        train.map_or(3.0, |t| t.antenna_height),
                    )?,
                    _ => None,
                };
                if let Some(t) = sc.cellular.threshold_dbm.or(auto) {
                    thresholds.handover_threshold_dbm = t;
                }
            }
        }

        let plan = build_frequency_plan(
            sc.channel.bandwidth_hz.a2t,
            trains.values().map(|t| (t.id, t.direction)),
        )?;
        let buffers = trains
            .keys()
            .map(|&t| {
                (
                    t,
                    RelayBuffer::new(assoc.server_of(t), sc.protocol.buffer_capacity_bytes),
                )
            })
            .collect();
        let mut flows: Vec<FlowState> = sc
            .traffic
            .flows
            .iter()
            .map(|f| FlowState {
                spec: f.clone(),
                tally: FlowTally::default(),
                cum_bits: 0.0,
                generated: 0,
            })
            .collect();
        flows.sort_by_key(|f| (f.spec.train, f.spec.class, f.spec.id));

        let mut sim = Simulation {
            mode: sc.mode,
            clock: SimulationClock::new(
                sc.engine.dt,
                sc.protocol.update_interval,
                sc.engine.end_time,
            ),
            channel: sc.channel.clone(),
            protocol: sc.protocol.clone(),
            radio: sc.radio.clone(),
            tracking: sc.tracking,
            delay: sc.delay.clone(),
            kinematics: w.train_kinematics,
            policy: FlightChangePolicy {
                reserve: sc.protocol.endurance_reserve,
                floor: sc.protocol.endurance_floor,
            },
            entry_dbm: thresholds.handover_threshold_dbm + sc.protocol.entry_hysteresis_db,
            thresholds,
            cellular_train_gain: sc.cellular.train_gain_dbi,
            slot: sc.resource.slot,
            tracks,
            trains,
            train_height,
            uavs,
            stations,
            networks: w.station_networks.clone(),
            faults: sc.engine.faults.clone(),
            controller: tracking_controllers().create(&w.uav_defaults.controller)?,
            access: access_schemes().create(&sc.resource.access)?,
            exec: handover_modes().create(&sc.protocol.handover_mode)?,
            assoc,
            links: BTreeMap::new(),
            samples: BTreeMap::new(),
            attach: BTreeMap::new(),
            plan,
            alloc: Allocation::default(),
            flows,
            buffers,
            vertical: BTreeMap::new(),
            no_spare: BTreeSet::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            events: BTreeMap::new(),
            out: Vec::new(),
        };
        let now = SimTime::ZERO;
        sim.measure(now).map_err(|e| e.at(now))?;
        sim.decide_attachments(now).map_err(|e| e.at(now))?;
        sim.refresh(now).map_err(|e| e.at(now))?;
        sim.allocate().map_err(|e| e.at(now))?;
        Ok(sim)
    }

    pub fn clock(&self) -> &SimulationClock {
        &self.clock
    }

    pub fn now(&self) -> SimTime {
        self.clock.now()
    }

    pub fn finished(&self) -> bool {
        self.clock.finished()
    }

    pub fn trains(&self) -> &BTreeMap<TrainId, TrainState> {
        &self.trains
    }

    pub fn uavs(&self) -> &BTreeMap<UavId, UavState> {
        &self.uavs
    }

    pub fn stations(&self) -> &BTreeMap<StationId, GroundStation> {
        &self.stations
    }

    pub fn association(&self) -> &AssociationTable {
        &self.assoc
    }

    pub fn attachment(&self, mobile: EntityId) -> Option<&Attachment> {
        self.attach.get(&mobile)
    }

    pub fn link(&self, mobile: EntityId, peer: EntityId) -> Option<&LinkState> {
        self.links.get(&(mobile, peer))
    }

    /// Channel sample of the current tick.
    pub fn sample(&self, mobile: EntityId, peer: EntityId) -> Option<&ChannelSample> {
        self.samples.get(&(mobile, peer))
    }

    pub fn allocation(&self) -> &Allocation {
        &self.alloc
    }

    /// Handover threshold in force (the auto midpoint level in baseline
    /// mode).
    pub fn handover_threshold(&self) -> f64 {
        self.thresholds.handover_threshold_dbm
    }

    /// Records produced since the last call.
    pub fn drain_records(&mut self) -> Vec<Record> {
        std::mem::take(&mut self.out)
    }

    pub fn summary(&self) -> Summary {
        let mut flows: Vec<&FlowState> = self.flows.iter().collect();
        flows.sort_by_key(|f| f.spec.id);
        Summary::from_tallies(
            self.mode,
            self.clock.tick,
            self.clock.dt,
            flows.into_iter().map(|f| (&f.spec, &f.tally)),
            &self.events,
        )
    }

    /// Advances one tick through the eight phases and returns the records it
    /// produced.
    pub fn step(&mut self) -> Result<Vec<Record>, EngineError> {
        let now = self.clock.advance();
        self.tick(now).map_err(|e| e.at(now))?;
        Ok(self.drain_records())
    }

    fn tick(&mut self, now: SimTime) -> Result<(), EngineError> {
        self.move_trains()?;
        self.fly_uavs()?;
        self.measure(now)?;
        self.decide_attachments(now)?;
        self.flight_changes(now)?;
        self.relay_fixup(now);
        self.vertical_handovers(now);
        self.refresh(now)?;
        let path = self.traffic(now)?;
        self.emit_links(now);
        self.out.extend(path);
        self.allocate()?;
        self.assoc.check()?;
        Ok(())
    }

    fn event(
        &mut self,
        now: SimTime,
        kind: EventKind,
        subject: EntityId,
        from: Option<String>,
        to: Option<String>,
    ) {
        log::debug!("{now} {} {subject} {from:?} -> {to:?}", kind.label());
        *self.events.entry(kind).or_default() += 1;
        self.out.push(Record::Event(EventRecord {
            time: now,
            kind,
            subject,
            from,
            to,
        }));
    }

    fn fault_active(&self, kind: FaultKind, target: u32, now: SimTime) -> bool {
        self.faults.iter().any(|f| {
            f.kind == kind
                && f.target == target
                && SimTime::ZERO.add(f.start) <= now
                && now < SimTime::ZERO.add(f.start).add(f.duration)
        })
    }

    // Phase 1.
    fn move_trains(&mut self) -> Result<(), EngineError> {
        let dt = self.clock.dt;
        for t in self.trains.values_mut() {
            *t = advance_train(t, &self.tracks[&t.track], dt, &self.kinematics)?;
        }
        Ok(())
    }

    // Phase 2.
    fn fly_uavs(&mut self) -> Result<(), EngineError> {
        let dt = self.clock.dt;
        for u in self.uavs.values_mut() {
            if !u.airborne {
                continue;
            }
            match u.served_train.and_then(|t| self.trains.get(&t)) {
                Some(train) => {
                    *u = uav_tracking_step(
                        u,
                        train,
                        &self.tracks[&train.track],
                        dt,
                        &self.tracking,
                        self.controller.as_ref(),
                    )?;
                }
                None => charge_flight(u, dt, 0.0),
            }
        }
        Ok(())
    }

    fn uav_a2g_end(&self, u: &UavState) -> RadioEnd {
        RadioEnd {
            position: u.position,
            velocity: u.velocity,
            tx_power_dbm: 0.0,
            antenna: Antenna::Aligned {
                peak_gain: self.radio.uav_a2g_gain_dbi,
            },
        }
    }

    fn train_end(&self, t: &TrainState, gain: f64) -> RadioEnd {
        let track = &self.tracks[&t.track];
        RadioEnd {
            position: t.antenna(track, self.train_height[&t.id]),
            velocity: t.velocity(track),
            tx_power_dbm: 0.0,
            antenna: Antenna::Aligned { peak_gain: gain },
        }
    }

    fn a2a_end(&self, u: &UavState) -> RadioEnd {
        RadioEnd {
            position: u.position,
            velocity: u.velocity,
            tx_power_dbm: self.radio.uav_a2a_tx_power_dbm,
            antenna: Antenna::Aligned {
                peak_gain: self.radio.uav_a2a_gain_dbi,
            },
        }
    }

    fn record_sample(&mut self, key: LinkKey, s: ChannelSample, now: SimTime) -> Result<(), EngineError> {
        let ls = self
            .links
            .entry(key)
            .or_insert_with(|| LinkState::new(key.0, key.1, now));
        update_rssi_window(ls, &s, now, self.clock.update_interval, &self.thresholds)?;
        self.samples.insert(key, s);
        Ok(())
    }

    // Phases 3 and 4: sample every measured link and fold the samples into
    // the averaging windows.
    fn measure(&mut self, now: SimTime) -> Result<(), EngineError> {
        self.samples.clear();
        let mut fresh = Vec::new();
        match self.mode {
            Mode::Uasr => {
                for u in self.uavs.values().filter(|u| u.airborne) {
                    let rx = self.uav_a2g_end(u);
                    let uav_blocked = self.fault_active(FaultKind::A2gBlockage, u.id.0, now);
                    for gs in self.stations.values() {
                        let tx = RadioEnd {
                            position: gs.antenna(),
                            velocity: Point3::ZERO,
                            tx_power_dbm: gs.tx_power,
                            antenna: Antenna::Aligned {
                                peak_gain: gs.beam.peak_gain,
                            },
                        };
                        let blocked =
                            uav_blocked || self.fault_active(FaultKind::GsOutage, gs.id.0, now);
                        let s = sample_link(
                            LinkKind::A2G,
                            &tx,
                            &rx,
                            self.channel.bandwidth_hz.a2g,
                            &self.channel,
                            &[],
                            blocked,
                        )?;
                        fresh.push(((u.id.into(), gs.id.into()), s));
                    }
                }
            }
            Mode::CellularBaseline => {
                for t in self.trains.values() {
                    let rx = self.train_end(t, self.cellular_train_gain);
                    let blocked = self.fault_active(FaultKind::A2tBlockage, t.id.0, now);
                    for bs in self.stations.values() {
                        let s = sample_link(
                            LinkKind::Cellular,
                            &bs_end(bs),
                            &rx,
                            self.channel.bandwidth_hz.cellular,
                            &self.channel,
                            &[],
                            blocked,
                        )?;
                        fresh.push(((t.id.into(), bs.id.into()), s));
                    }
                }
            }
        }
        for (key, s) in fresh {
            self.record_sample(key, s, now)?;
        }
        self.refresh(now)
    }

    /// Samples A2A relay hops and A2T serving links that have no sample yet
    /// this tick, e.g. because the association changed.
    fn refresh(&mut self, now: SimTime) -> Result<(), EngineError> {
        if self.mode != Mode::Uasr {
            return Ok(());
        }
        let mut fresh = Vec::new();
        for u in self.uavs.values().filter(|u| u.airborne) {
            if let Some(Uplink::Relay(r)) = self.assoc.uplink_of(u.id.into()) {
                let key: LinkKey = (u.id.into(), r.into());
                if self.samples.contains_key(&key) {
                    continue;
                }
                let relay = &self.uavs[&r];
                let s = sample_link(
                    LinkKind::A2A,
                    &self.a2a_end(relay),
                    &self.a2a_end(u),
                    self.channel.bandwidth_hz.a2a,
                    &self.channel,
                    &[],
                    false,
                )?;
                fresh.push((key, s));
            }
        }
        for (train, uav) in self.assoc.servers() {
            let key: LinkKey = (train.into(), uav.into());
            if self.samples.contains_key(&key) || !self.uavs[&uav].airborne {
                continue;
            }
            let s = self.sample_a2t(train, uav, now)?;
            fresh.push((key, s));
        }
        for (key, s) in fresh {
            self.record_sample(key, s, now)?;
        }
        Ok(())
    }

    fn a2t_band(&self, train: TrainId, uav: UavId) -> (Point3, f64, f64, Vec<UavId>) {
        let u = &self.uavs[&uav];
        let t = &self.trains[&train];
        match self.alloc.grants.get(&train).filter(|g| g.uav == uav) {
            Some(g) => (g.boresight, g.band.width(), g.share, g.co_channel.clone()),
            None => {
                let target = t.antenna(&self.tracks[&t.track], self.train_height[&train]);
                let mut b = target - u.position;
                if b.norm() == 0.0 {
                    b = Point3::new(0.0, 0.0, -1.0);
                }
                let width = self.plan.band(train).map_or(0.0, |b| b.width());
                (b, width, 1.0, Vec::new())
            }
        }
    }

    fn a2t_tx(&self, u: &UavState, boresight: Point3) -> RadioEnd {
        RadioEnd {
            position: u.position,
            velocity: u.velocity,
            tx_power_dbm: self.radio.uav_a2t_tx_power_dbm,
            antenna: Antenna::Steered {
                boresight,
                beamwidth: self.radio.uav_a2t_beamwidth_deg,
                peak_gain: self.radio.uav_a2t_gain_dbi,
            },
        }
    }

    /// The UAV beam points where the previous tick's schedule predicted the
    /// train would be; co-channel UAVs interfere through their own beams.
    fn sample_a2t(&self, train: TrainId, uav: UavId, now: SimTime) -> Result<ChannelSample, EngineError> {
        let (boresight, width, _, co) = self.a2t_band(train, uav);
        let tx = self.a2t_tx(&self.uavs[&uav], boresight);
        let rx = self.train_end(&self.trains[&train], self.radio.train_gain_dbi);
        let interferers: Vec<RadioEnd> = co
            .iter()
            .filter_map(|other| {
                let u = self.uavs.get(other)?;
                let g = self.alloc.grants.values().find(|g| g.uav == *other)?;
                Some(self.a2t_tx(u, g.boresight))
            })
            .collect();
        let blocked = self.fault_active(FaultKind::A2tBlockage, train.0, now);
        Ok(sample_link(
            LinkKind::A2T,
            &tx,
            &rx,
            width,
            &self.channel,
            &interferers,
            blocked,
        )?)
    }

    fn set_status(&mut self, m: EntityId, status: LinkStatus, now: SimTime) {
        let att = self.attach.entry(m).or_insert_with(|| Attachment::new(now));
        if att.status != status {
            att.status = status;
            att.entered = now;
            if status == LinkStatus::Interrupted {
                self.event(now, EventKind::Interrupted, m, None, None);
            }
        }
    }

    fn class_of(&self, key: &LinkKey) -> LinkStatus {
        match self.links.get(key) {
            Some(ls) if ls.interrupted(&self.thresholds) => LinkStatus::Interrupted,
            Some(ls) if ls.averaged_rssi.is_some_and(|a| a < self.thresholds.handover_threshold_dbm) => {
                LinkStatus::Degraded
            }
            Some(_) => LinkStatus::Connected,
            None => LinkStatus::Interrupted,
        }
    }

    /// Non-interrupted station links of `m` with their averaged RSSI, in
    /// station id order.
    fn usable_stations(&self, m: EntityId) -> Vec<(StationId, f64)> {
        self.stations
            .keys()
            .filter_map(|&s| {
                let ls = self.links.get(&(m, s.into()))?;
                if ls.interrupted(&self.thresholds) {
                    return None;
                }
                Some((s, ls.averaged_rssi?))
            })
            .collect()
    }

    fn mobiles(&self) -> Vec<EntityId> {
        match self.mode {
            Mode::Uasr => self
                .uavs
                .values()
                .filter(|u| u.airborne)
                .map(|u| u.id.into())
                .collect(),
            Mode::CellularBaseline => self.trains.keys().map(|&t| t.into()).collect(),
        }
    }

    fn handover_kind(&self) -> EventKind {
        match self.mode {
            Mode::Uasr => EventKind::A2gHandover,
            Mode::CellularBaseline => EventKind::CellularHandover,
        }
    }

    fn gap(&self) -> Duration {
        Duration::from_millis(
            self.clock.dt.millis() * u64::from(self.exec.gap_ticks(self.protocol.hard_gap_ticks)),
        )
    }

    fn start_gap(&mut self, m: EntityId, now: SimTime, gap: Duration) {
        if gap.millis() > 0 {
            if let Some(att) = self.attach.get_mut(&m) {
                att.gap_until = now.add(gap);
            }
            self.set_status(m, LinkStatus::HandoverInProgress, now);
        }
    }

    fn switch_station(&mut self, m: EntityId, to: StationId, now: SimTime) {
        let ev = execute_handover(
            &mut self.assoc,
            m,
            HandoverDecision::Handover(to),
            true,
            self.exec.as_ref(),
            self.protocol.hard_gap_ticks,
            self.clock.dt,
            now,
        );
        if let Some(ev) = ev {
            let kind = self.handover_kind();
            self.event(now, kind, m, label(ev.from), Some(ev.to.to_string()));
            let status = self.class_of(&(m, to.into()));
            self.set_status(m, status, now);
            if let Some(att) = self.attach.get_mut(&m) {
                att.last_handover = Some(now);
                att.qualified_since = None;
            }
            self.start_gap(m, now, ev.gap);
        }
    }

    fn try_failover(&mut self, m: EntityId, now: SimTime) -> bool {
        let EntityId::Uav(id) = m else {
            return false;
        };
        let neighbors: Vec<Neighbor<'_>> = self
            .uavs
            .values()
            .filter(|v| v.airborne && v.id != id)
            .map(|v| {
                let healthy = match self.assoc.uplink_of(v.id.into()) {
                    Some(Uplink::Station(s)) => self
                        .links
                        .get(&(v.id.into(), s.into()))
                        .is_some_and(|ls| !ls.interrupted(&self.thresholds)),
                    _ => false,
                };
                Neighbor { uav: v, healthy }
            })
            .collect();
        let from = self.assoc.uplink_of(m);
        let Some(relay) = a2a_failover(
            &mut self.assoc,
            &self.uavs[&id],
            &neighbors,
            self.protocol.a2a_range_m,
        ) else {
            return false;
        };
        self.event(
            now,
            EventKind::Failover,
            m,
            label(from),
            Some(Uplink::Relay(relay).to_string()),
        );
        self.set_status(m, LinkStatus::Relayed, now);
        if let Some(att) = self.attach.get_mut(&m) {
            att.qualified_since = None;
        }
        let gap = self.gap();
        self.start_gap(m, now, gap);
        true
    }

    // Phase 5a.
    fn decide_attachments(&mut self, now: SimTime) -> Result<(), EngineError> {
        for m in self.mobiles() {
            self.decide(m, now);
        }
        Ok(())
    }

    fn decide(&mut self, m: EntityId, now: SimTime) {
        let att = self
            .attach
            .entry(m)
            .or_insert_with(|| Attachment::new(now))
            .clone();
        if now < att.gap_until {
            return;
        }
        let usable = self.usable_stations(m);
        match self.assoc.uplink_of(m) {
            None => {
                let best = usable
                    .iter()
                    .copied()
                    .reduce(|a, b| if b.1 > a.1 { b } else { a });
                if let Some((s, _)) = best {
                    self.assoc.set_uplink(m, Uplink::Station(s));
                    self.event(now, EventKind::Attach, m, None, Some(s.to_string()));
                    let status = self.class_of(&(m, s.into()));
                    self.set_status(m, status, now);
                } else if !self.try_failover(m, now) {
                    self.set_status(m, LinkStatus::Interrupted, now);
                }
            }
            Some(Uplink::Station(s)) => {
                let key = (m, s.into());
                let others: Vec<(StationId, f64)> =
                    usable.iter().copied().filter(|c| c.0 != s).collect();
                if self.class_of(&key) == LinkStatus::Interrupted {
                    let d = evaluate_handover(
                        f64::NEG_INFINITY,
                        &others,
                        self.thresholds.handover_threshold_dbm,
                        self.entry_dbm,
                    );
                    if let HandoverDecision::Handover(to) = d {
                        self.switch_station(m, to, now);
                    } else if !self.try_failover(m, now) {
                        self.set_status(m, LinkStatus::Interrupted, now);
                    }
                    return;
                }
                let avg = self.links[&key].averaged_rssi.unwrap_or(f64::NEG_INFINITY);
                let guard_ok = att
                    .last_handover
                    .is_none_or(|t| now.saturating_sub(t) >= self.protocol.dwell_guard);
                match evaluate_handover(
                    avg,
                    &others,
                    self.thresholds.handover_threshold_dbm,
                    self.entry_dbm,
                ) {
                    HandoverDecision::Handover(to) if guard_ok => self.switch_station(m, to, now),
                    // Below threshold with nowhere better to go: the link is
                    // kept and counts as degraded, not interrupted.
                    _ => {
                        let status = self.class_of(&key);
                        self.set_status(m, status, now);
                    }
                }
            }
            Some(Uplink::Relay(r)) => {
                let best = usable
                    .iter()
                    .copied()
                    .filter(|c| c.1 >= self.entry_dbm)
                    .reduce(|a, b| if b.1 > a.1 { b } else { a });
                if let Some((s, _)) = best {
                    let since = *self
                        .attach
                        .get_mut(&m)
                        .expect("attachment exists")
                        .qualified_since
                        .get_or_insert(now);
                    if now.saturating_sub(since) >= self.clock.update_interval {
                        let from = self.assoc.set_uplink(m, Uplink::Station(s));
                        self.event(now, EventKind::Restore, m, label(from), Some(s.to_string()));
                        let status = self.class_of(&(m, s.into()));
                        self.set_status(m, status, now);
                        if let Some(a) = self.attach.get_mut(&m) {
                            a.qualified_since = None;
                            a.last_handover = Some(now);
                        }
                        let gap = self.gap();
                        self.start_gap(m, now, gap);
                        return;
                    }
                } else if let Some(a) = self.attach.get_mut(&m) {
                    a.qualified_since = None;
                }
                let relay_ok = self.uavs.get(&r).is_some_and(|u| u.airborne)
                    && match self.assoc.uplink_of(r.into()) {
                        Some(Uplink::Station(s2)) => {
                            self.class_of(&(r.into(), s2.into())) != LinkStatus::Interrupted
                        }
                        _ => false,
                    }
                    && self.class_of(&(m, r.into())) != LinkStatus::Interrupted;
                if relay_ok {
                    self.set_status(m, LinkStatus::Relayed, now);
                } else {
                    self.assoc.clear_uplink(m);
                    if !self.try_failover(m, now) {
                        self.set_status(m, LinkStatus::Interrupted, now);
                    }
                }
            }
        }
    }

    fn forget_uav(&mut self, u: UavId) {
        let e: EntityId = u.into();
        self.links.retain(|k, _| k.0 != e && k.1 != e);
        self.samples.retain(|k, _| k.0 != e && k.1 != e);
        self.attach.remove(&e);
        self.no_spare.remove(&u);
        if let Some(s) = self.uavs.get_mut(&u) {
            s.position.z = 0.0;
        }
    }

    fn at_station(&self, t: &TrainState) -> bool {
        self.tracks[&t.track]
            .station_within(t.position, self.protocol.station_zone_m)
            .is_some()
            && t.speed <= self.protocol.station_speed_ceiling
    }

    fn run_flight_change(
        &mut self,
        old: UavId,
        new: UavId,
        train: TrainId,
        now: SimTime,
    ) -> Result<(), EngineError> {
        let t = self.trains[&train].clone();
        let at_station = self.at_station(&t);
        let mut o = self.uavs.remove(&old).expect("known uav");
        let mut n = self.uavs.remove(&new).expect("known uav");
        let res = flight_change(&mut self.assoc, &mut o, &mut n, &t, at_station, &self.policy);
        self.uavs.insert(old, o);
        self.uavs.insert(new, n);
        match res? {
            FlightChangeOutcome::Transferred { from, to } => {
                self.event(
                    now,
                    EventKind::FlightChange,
                    train.into(),
                    Some(from.to_string()),
                    Some(to.to_string()),
                );
                if !self.uavs[&from].airborne {
                    self.forget_uav(from);
                }
            }
            FlightChangeOutcome::ForcedRelease { released } => {
                self.event(
                    now,
                    EventKind::ForcedRelease,
                    train.into(),
                    Some(released.to_string()),
                    None,
                );
                self.forget_uav(released);
            }
            FlightChangeOutcome::NotNeeded | FlightChangeOutcome::Waiting => {}
        }
        Ok(())
    }

    // Phase 5b.
    fn flight_changes(&mut self, now: SimTime) -> Result<(), EngineError> {
        if self.mode != Mode::Uasr {
            return Ok(());
        }
        let train_ids: Vec<TrainId> = self.trains.keys().copied().collect();
        for train in train_ids {
            match self.assoc.server_of(train) {
                Some(old) => {
                    if let Some(new) = self.assoc.pending_for(old) {
                        self.run_flight_change(old, new, train, now)?;
                        continue;
                    }
                    if !needs_replacement(&self.uavs[&old], &self.policy) {
                        continue;
                    }
                    let near = self.uavs[&old].position;
                    match select_spare(self.uavs.values(), &self.assoc, near, &self.policy) {
                        Some(spare) => {
                            let t = self.trains[&train].clone();
                            let sp = self.uavs.get_mut(&spare).expect("known uav");
                            dispatch(&mut self.assoc, old, sp, &t);
                            self.event(
                                now,
                                EventKind::FlightChangeDispatch,
                                train.into(),
                                Some(old.to_string()),
                                Some(spare.to_string()),
                            );
                        }
                        None => {
                            if self.no_spare.insert(old) {
                                self.event(now, EventKind::NoSpare, old.into(), None, None);
                            }
                            if at_floor(&self.uavs[&old], &self.policy) {
                                self.assoc.release_train(train);
                                let u = self.uavs.get_mut(&old).expect("known uav");
                                land(&mut self.assoc, u);
                                self.event(
                                    now,
                                    EventKind::ForcedRelease,
                                    train.into(),
                                    Some(old.to_string()),
                                    None,
                                );
                                self.forget_uav(old);
                            }
                        }
                    }
                }
                None => {
                    let pending = self
                        .assoc
                        .pending()
                        .find(|(_, n)| self.uavs[n].served_train == Some(train));
                    if let Some((old, new)) = pending {
                        self.run_flight_change(old, new, train, now)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Drops relay routes whose relay lost its own direct attachment this
    /// tick.
    fn relay_fixup(&mut self, now: SimTime) {
        for m in self.mobiles() {
            if let Some(Uplink::Relay(r)) = self.assoc.uplink_of(m) {
                if !matches!(self.assoc.uplink_of(r.into()), Some(Uplink::Station(_))) {
                    self.assoc.clear_uplink(m);
                    self.set_status(m, LinkStatus::Interrupted, now);
                }
            }
        }
    }

    // Phase 5c.
    fn vertical_handovers(&mut self, now: SimTime) {
        let ids: Vec<TrainId> = self.trains.keys().copied().collect();
        for id in ids {
            let t = &self.trains[&id];
            let change = vertical_handover(
                t,
                &self.tracks[&t.track],
                &self.networks,
                self.vertical.get(&id).copied(),
                self.protocol.station_zone_m,
                self.protocol.station_speed_ceiling,
            );
            match change {
                Some(VerticalChange::Attach(n)) => {
                    self.vertical.insert(id, n);
                    self.event(now, EventKind::VerticalAttach, id.into(), None, Some(format!("net{n}")));
                }
                Some(VerticalChange::Detach(n)) => {
                    self.vertical.remove(&id);
                    self.event(now, EventKind::VerticalDetach, id.into(), Some(format!("net{n}")), None);
                }
                None => {}
            }
        }
    }

    // Phase 6. The grants are used by the next tick's A2T sampling.
    fn allocate(&mut self) -> Result<(), EngineError> {
        if self.mode != Mode::Uasr {
            return Ok(());
        }
        let dt = self.clock.dt;
        let mut links = Vec::new();
        for (train, uav) in self.assoc.servers() {
            let u = &self.uavs[&uav];
            if !u.airborne {
                continue;
            }
            let t = &self.trains[&train];
            let track = &self.tracks[&t.track];
            let s = predict_position(track, t.position, t.speed, t.direction, dt);
            links.push(ServedLink {
                train,
                uav,
                direction: t.direction,
                uav_position: u.position + u.velocity * dt.secs(),
                predicted: track.point_at(s).with_height(self.train_height[&train]),
            });
        }
        let slots = (dt.millis() / self.slot.millis()).max(1) as u32;
        self.alloc = self.access.allocate(&AccessRequest {
            tick: self.clock.tick,
            slots_per_tick: slots,
            plan: &self.plan,
            links: &links,
        })?;
        Ok(())
    }

    fn path_for(&self, train: TrainId, now: SimTime) -> PathInfo {
        if let Some(n) = self
            .vertical
            .get(&train)
            .and_then(|id| self.networks.iter().find(|n| n.id == *id))
        {
            return PathInfo {
                route: Route::StationNetwork,
                status: LinkStatus::Connected,
                capacity: n.capacity_bps,
                path: Some(DelayPath {
                    hops: Vec::new(),
                    forwarding_nodes: 0,
                    network_latency: n.latency_s,
                }),
                gap: false,
            };
        }
        match self.mode {
            Mode::CellularBaseline => {
                let m: EntityId = train.into();
                let (Some(att), Some(Uplink::Station(bs))) =
                    (self.attach.get(&m), self.assoc.uplink_of(m))
                else {
                    return PathInfo::none();
                };
                let gap = now < att.gap_until;
                let Some(s) = self.samples.get(&(m, bs.into())) else {
                    return PathInfo::none();
                };
                if att.status == LinkStatus::Interrupted {
                    return PathInfo::none();
                }
                PathInfo {
                    route: Route::Cellular,
                    status: att.status,
                    capacity: if gap { 0.0 } else { s.capacity },
                    path: Some(DelayPath {
                        hops: vec![s.range],
                        forwarding_nodes: 1,
                        network_latency: 0.0,
                    }),
                    gap,
                }
            }
            Mode::Uasr => {
                let Some(uav) = self.assoc.server_of(train) else {
                    return PathInfo::none();
                };
                let m: EntityId = uav.into();
                let a2t_key: LinkKey = (train.into(), m);
                let (Some(att), Some(a2t)) = (self.attach.get(&m), self.samples.get(&a2t_key))
                else {
                    return PathInfo::none();
                };
                if att.status == LinkStatus::Interrupted
                    || self.class_of(&a2t_key) == LinkStatus::Interrupted
                {
                    return PathInfo::none();
                }
                let gap = now < att.gap_until;
                let (_, _, share, _) = self.a2t_band(train, uav);
                let a2t_cap = a2t.capacity * share;
                let (capacity, hops, nodes) = match self.assoc.uplink_of(m) {
                    Some(Uplink::Station(s)) => {
                        let Some(a2g) = self.samples.get(&(m, s.into())) else {
                            return PathInfo::none();
                        };
                        (a2g.capacity.min(a2t_cap), vec![a2g.range, a2t.range], 1)
                    }
                    Some(Uplink::Relay(r)) => {
                        let (Some(Uplink::Station(s2)), Some(a2a)) =
                            (self.assoc.uplink_of(r.into()), self.samples.get(&(m, r.into())))
                        else {
                            return PathInfo::none();
                        };
                        let Some(a2g) = self.samples.get(&(r.into(), s2.into())) else {
                            return PathInfo::none();
                        };
                        let a2a_cap = (a2a.capacity - self.protocol.a2a_control_bps).max(0.0);
                        (
                            a2g.capacity.min(a2a_cap).min(a2t_cap),
                            vec![a2g.range, a2a.range, a2t.range],
                            2,
                        )
                    }
                    None => return PathInfo::none(),
                };
                PathInfo {
                    route: if nodes == 2 { Route::Relayed } else { Route::Direct },
                    status: att.status,
                    capacity: if gap { 0.0 } else { capacity },
                    path: Some(DelayPath {
                        hops,
                        forwarding_nodes: nodes,
                        network_latency: 0.0,
                    }),
                    gap,
                }
            }
        }
    }

    fn offered_bytes(&mut self, i: usize) -> u64 {
        let tick = self.clock.tick;
        let dt = self.clock.dt;
        let f = &mut self.flows[i];
        let rate = f.spec.rate_bps.max(0.0);
        if f.spec.jitter > 0.0 {
            let u: f64 = self.rng.random_range(-1.0..1.0);
            f.cum_bits += rate * (1.0 + f.spec.jitter * u) * dt.secs();
        } else {
            f.cum_bits = rate * (tick * dt.millis()) as f64 / 1000.0;
        }
        let total = (f.cum_bits / 8.0).floor() as u64;
        let offered = total.saturating_sub(f.generated);
        f.generated = f.generated.max(total);
        offered
    }

    // Phase 7.
    fn traffic(&mut self, now: SimTime) -> Result<Vec<Record>, EngineError> {
        let mut out = Vec::new();
        let dt = self.clock.dt;
        let train_ids: Vec<TrainId> = self.trains.keys().copied().collect();
        for train in train_ids {
            let idx: Vec<usize> = (0..self.flows.len())
                .filter(|&i| self.flows[i].spec.train == train)
                .collect();
            if idx.is_empty() {
                continue;
            }
            let info = self.path_for(train, now);
            let owner = self.assoc.server_of(train);
            let mut per_flow: BTreeMap<usize, (u64, u64, u64)> = BTreeMap::new();
            for &i in &idx {
                let offered = self.offered_bytes(i);
                let dropped = if info.gap {
                    offered
                } else {
                    let buf = self.buffers.get_mut(&train).expect("buffer per train");
                    buf.enqueue(self.flows[i].spec.id, offered, now)
                };
                let f = &mut self.flows[i];
                f.tally.offered += offered;
                f.tally.dropped += dropped;
                if info.status == LinkStatus::Interrupted {
                    f.tally.interrupted_ticks += 1;
                }
                per_flow.insert(i, (offered, 0, dropped));
            }
            let buf = self.buffers.get_mut(&train).expect("buffer per train");
            buf.owner = owner;
            let budget = match info.path {
                Some(_) => bytes_per_tick(info.capacity, dt),
                None => 0,
            };
            let drained = buf.drain(budget, now);
            for d in drained {
                let i = idx
                    .iter()
                    .copied()
                    .find(|&i| self.flows[i].spec.id == d.flow)
                    .expect("buffered bytes belong to a flow of this train");
                let path = info.path.as_ref().expect("drained only with a path");
                let budget = compute_delay(
                    path,
                    self.delay.uav_processing_s,
                    self.delay.hst_processing_s,
                    d.queuing.secs(),
                );
                let f = &mut self.flows[i];
                f.tally.delivered += d.bytes;
                f.tally.delays.push(budget.total);
                per_flow.get_mut(&i).expect("flow entry").1 += d.bytes;
                out.push(Record::Delivery(DeliveryRecord {
                    time: now,
                    flow: d.flow,
                    train,
                    bytes: d.bytes,
                    path_range: path.range(),
                    delay: budget,
                }));
            }
            let buf = &self.buffers[&train];
            for (&i, &(offered, delivered, dropped)) in &per_flow {
                let f = &self.flows[i];
                let buffered = buf.buffered_for(f.spec.id);
                let t = &f.tally;
                if t.offered != t.delivered + t.dropped + buffered {
                    return Err(EngineError::Conservation {
                        flow: f.spec.id,
                        offered: t.offered,
                        delivered: t.delivered,
                        dropped: t.dropped,
                        buffered,
                    });
                }
                out.push(Record::Flow(FlowRecord {
                    time: now,
                    flow: f.spec.id,
                    train,
                    class: f.spec.class,
                    status: info.status,
                    route: info.route,
                    offered,
                    delivered,
                    dropped,
                    buffered,
                }));
            }
        }
        Ok(out)
    }

    fn link_record(&self, now: SimTime, key: LinkKey, share: f64) -> Option<Record> {
        let s = self.samples.get(&key)?;
        let ls = self.links.get(&key)?;
        Some(Record::Link(LinkRecord {
            time: now,
            kind: s.kind,
            mobile: key.0,
            peer: key.1,
            status: ls.status,
            rssi: s.rssi,
            avg_rssi: ls.averaged_rssi,
            sinr: s.sinr,
            capacity: s.capacity * share,
            doppler: s.doppler,
            range: s.range,
        }))
    }

    // Phase 8: serving links only.
    fn emit_links(&mut self, now: SimTime) {
        let mut recs = Vec::new();
        for m in self.mobiles() {
            let key = match self.assoc.uplink_of(m) {
                Some(Uplink::Station(s)) => (m, s.into()),
                Some(Uplink::Relay(r)) => (m, r.into()),
                None => continue,
            };
            recs.extend(self.link_record(now, key, 1.0));
        }
        if self.mode == Mode::Uasr {
            for (train, uav) in self.assoc.servers() {
                let (_, _, share, _) = self.a2t_band(train, uav);
                recs.extend(self.link_record(now, (train.into(), uav.into()), share));
            }
        }
        self.out.extend(recs);
    }
}
