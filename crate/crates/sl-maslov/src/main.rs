use std::process::ExitCode;

use sl_maslov::{execute, parse_config, Parsed};

fn main() -> ExitCode {
    match parse_config(std::env::args_os()) {
        Ok(Parsed::Display(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(Parsed::Run(cfg)) => ExitCode::from(execute(&cfg) as u8),
        Err(e) => {
            let record = e.record(None);
            eprintln!(
                "{}",
                serde_json::to_string(&record).expect("error record serializes")
            );
            ExitCode::from(record.exit_code as u8)
        }
    }
}
