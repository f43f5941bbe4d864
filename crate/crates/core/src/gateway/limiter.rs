use std::sync::{Condvar, Mutex};

/// Counting semaphore that admits waiters in arrival order.
#[derive(Debug)]
pub struct Limiter {
    limit: usize,
    state: Mutex<State>,
    cv: Condvar,
}

#[derive(Debug, Default)]
struct State {
    next_ticket: u64,
    serving: u64,
    in_flight: usize,
}

/// Held slot; released on drop.
#[derive(Debug)]
pub struct Permit<'a> {
    limiter: &'a Limiter,
}

impl Limiter {
    pub fn new(limit: usize) -> Self {
        assert!(limit >= 1, "limit must be at least 1");
        Limiter {
            limit,
            state: Mutex::new(State::default()),
            cv: Condvar::new(),
        }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn in_flight(&self) -> usize {
        self.state.lock().unwrap().in_flight
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut st = self.state.lock().unwrap();
        let ticket = st.next_ticket;
        st.next_ticket += 1;
        while !(st.serving == ticket && st.in_flight < self.limit) {
            st = self.cv.wait(st).unwrap();
        }
        st.serving += 1;
        st.in_flight += 1;
        drop(st);
        // the next ticket may already be admissible
        self.cv.notify_all();
        Permit { limiter: self }
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut st = self.limiter.state.lock().unwrap();
        st.in_flight -= 1;
        drop(st);
        self.limiter.cv.notify_all();
    }
}
