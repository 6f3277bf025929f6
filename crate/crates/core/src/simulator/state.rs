const IDLE: u32 = u32::MAX;

/// Queue lengths with incrementally maintained occupancy counts.
///
/// `count(i)` is `Q_i`, the number of servers holding at least `i` tasks.
/// Busy servers are kept in an indexed set so one can be drawn uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    lengths: Vec<u32>,
    counts: Vec<u64>,
    busy: Vec<u32>,
    busy_pos: Vec<u32>,
    total: u64,
}

impl SystemState {
    pub fn empty(n: usize) -> Self {
        SystemState {
            lengths: vec![0; n],
            counts: vec![n as u64],
            busy: Vec::new(),
            busy_pos: vec![IDLE; n],
            total: 0,
        }
    }

    pub fn from_lengths(lengths: &[u32]) -> Self {
        let mut state = SystemState::empty(lengths.len());
        for (v, &len) in lengths.iter().enumerate() {
            for _ in 0..len {
                state.add(v);
            }
        }
        state
    }

    pub fn n_servers(&self) -> usize {
        self.lengths.len()
    }

    pub fn length(&self, v: usize) -> u32 {
        self.lengths[v]
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    /// `Q_i`; `Q_0 = N` and zero above the longest queue.
    pub fn count(&self, i: usize) -> u64 {
        self.counts.get(i).copied().unwrap_or(0)
    }

    /// `Q_0..Q_L` with `L` the longest queue.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn max_length(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn total_tasks(&self) -> u64 {
        self.total
    }

    pub fn busy_count(&self) -> usize {
        self.busy.len()
    }

    pub fn busy_server(&self, idx: usize) -> usize {
        self.busy[idx] as usize
    }

    /// Adds a task to `v`; returns its new length.
    pub fn add(&mut self, v: usize) -> u32 {
        let len = self.lengths[v] + 1;
        self.lengths[v] = len;
        let level = len as usize;
        if level == self.counts.len() {
            self.counts.push(0);
        }
        self.counts[level] += 1;
        if len == 1 {
            self.busy_pos[v] = self.busy.len() as u32;
            self.busy.push(v as u32);
        }
        self.total += 1;
        len
    }

    /// Removes a task from `v`, which must be busy; returns its new length.
    pub fn remove(&mut self, v: usize) -> u32 {
        let old = self.lengths[v];
        assert!(old > 0, "departure from empty server {v}");
        self.lengths[v] = old - 1;
        self.counts[old as usize] -= 1;
        while self.counts.len() > 1 && *self.counts.last().unwrap() == 0 {
            self.counts.pop();
        }
        if old == 1 {
            let pos = self.busy_pos[v] as usize;
            let last = self.busy.pop().unwrap();
            if pos < self.busy.len() {
                self.busy[pos] = last;
                self.busy_pos[last as usize] = pos as u32;
            }
            self.busy_pos[v] = IDLE;
        }
        self.total -= 1;
        old - 1
    }

    /// Fractions `q_1..q_depth` and the overflow fraction `q_{depth+1}`.
    pub fn occupancy(&self, depth: usize) -> (Vec<f64>, f64) {
        let n = self.n_servers() as f64;
        let q = (1..=depth).map(|i| self.count(i) as f64 / n).collect();
        (q, self.count(depth + 1) as f64 / n)
    }

    /// Recounts everything from the queue lengths.
    pub fn verify(&self) -> Result<(), String> {
        let max = self.lengths.iter().copied().max().unwrap_or(0) as usize;
        let mut fresh = vec![0u64; max + 1];
        for &len in &self.lengths {
            for slot in &mut fresh[..=len as usize] {
                *slot += 1;
            }
        }
        if fresh != self.counts {
            return Err(format!("occupancy counts {:?} but recount gives {fresh:?}", self.counts));
        }
        if fresh.windows(2).any(|w| w[1] > w[0]) || fresh[0] != self.n_servers() as u64 {
            return Err(format!("counts not monotone from N: {fresh:?}"));
        }
        let busy = self.lengths.iter().filter(|&&l| l > 0).count();
        if busy != self.busy.len() {
            return Err(format!("{busy} busy servers but busy set holds {}", self.busy.len()));
        }
        for (pos, &v) in self.busy.iter().enumerate() {
            if self.lengths[v as usize] == 0 || self.busy_pos[v as usize] as usize != pos {
                return Err(format!("busy set corrupt at server {v}"));
            }
        }
        let total: u64 = self.lengths.iter().map(|&l| u64::from(l)).sum();
        if total != self.total {
            return Err(format!("total {} but lengths sum to {total}", self.total));
        }
        Ok(())
    }
}
