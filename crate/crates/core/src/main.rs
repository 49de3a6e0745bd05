use std::io::{self, Write};

/// Standard output that stops quietly when the reader goes away (`| head`).
struct Stdout(io::StdoutLock<'static>);

impl Write for Stdout {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        match self.0.write(buf) {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(buf.len()),
            r => r,
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        match self.0.flush() {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
            r => r,
        }
    }
}

fn main() {
    let mut stdout = Stdout(io::stdout().lock());
    let code = gyration::cli::run(std::env::args_os(), &mut stdout, &mut io::stderr().lock());
    std::process::exit(code);
}
