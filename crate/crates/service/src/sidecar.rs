use std::io;
use std::net::TcpListener;
use std::str::FromStr;

use clore_core::predictor::protocol::serve_connection;
use clore_core::predictor::{Predictor, PredictorInput, ReferenceClickPredictor};
use clore_core::raster::ProbMask;

/// What a standalone sidecar answers with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SidecarMode {
    /// Return the previous-mask plane unchanged.
    Echo,
    /// Run the reference predictor.
    Reference,
}

impl FromStr for SidecarMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "echo" => Ok(SidecarMode::Echo),
            "reference" => Ok(SidecarMode::Reference),
            other => Err(format!("unknown sidecar mode {other:?}, expected echo or reference")),
        }
    }
}

pub fn answer(mode: SidecarMode, input: &PredictorInput) -> Result<ProbMask, u32> {
    match mode {
        SidecarMode::Echo => Ok(ProbMask::from_mask(&input.prev_mask)),
        SidecarMode::Reference => ReferenceClickPredictor::default().predict(input).map_err(|e| {
            log::warn!("sidecar predict failed: {e}");
            3
        }),
    }
}

/// Accept connections forever, one thread per connection.
pub fn run(listener: TcpListener, mode: SidecarMode) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
        std::thread::spawn(move || {
            if let Err(e) = serve_connection(stream, |input| answer(mode, input)) {
                log::warn!("sidecar connection {peer}: {e}");
            }
        });
    }
    Ok(())
}

/// Serve a single peer over stdin/stdout, for `cmd:` endpoints.
pub fn run_stdio(mode: SidecarMode) -> io::Result<()> {
    struct Stdio(io::Stdin, io::Stdout);
    impl io::Read for Stdio {
        fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
            self.0.read(buf)
        }
    }
    impl io::Write for Stdio {
        fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
            self.1.write(buf)
        }
        fn flush(&mut self) -> io::Result<()> {
            self.1.flush()
        }
    }
    serve_connection(Stdio(io::stdin(), io::stdout()), |input| answer(mode, input))
        .map_err(|e| io::Error::other(e.to_string()))
}
