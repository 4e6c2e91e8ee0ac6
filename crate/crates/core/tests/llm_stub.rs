use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread::JoinHandle;

use devloop::generation::{
    GenerationError, GenerationRequest, Generator, LlmClient, LlmConfig, PromptSpec,
};
use devloop::harness::{ChatChainEnvironment, EnvironmentConfig, Executor, RunConfig};
use devloop::orchestrator::ChatChainConfig;
use devloop::par::Parallelism;
use devloop::{Instance, PhaseVocabulary};
use serde_json::{json, Value};

/// Serves `replies` in order, one connection each, and returns the request
/// headers and bodies it saw.
fn stub(replies: Vec<(u16, String)>) -> (String, JoinHandle<Vec<(String, String)>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!(
        "http://{}/v1/chat/completions",
        listener.local_addr().unwrap()
    );
    let handle = std::thread::spawn(move || {
        let mut seen = Vec::new();
        for (status, body) in replies {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = String::new();
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                headers.push_str(&line);
            }
            let mut request = vec![0; length];
            reader.read_exact(&mut request).unwrap();
            seen.push((headers, String::from_utf8(request).unwrap()));
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        seen
    });
    (url, handle)
}

fn completion(content: &str) -> (u16, String) {
    (
        200,
        json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string(),
    )
}

fn config(url: &str, key_env: &str) -> LlmConfig {
    std::env::set_var(key_env, "test-key");
    LlmConfig {
        endpoint: url.to_string(),
        model: "stub-model".into(),
        api_key_env: key_env.into(),
        timeout_secs: 10,
        retries: 0,
    }
}

#[test]
fn generation_parses_and_truncates_the_reply() {
    let reply = "Here are some:\n1. DemandAnalysis -> Coding -> Manual\n- Coding → CodeComplete\nnot an instance\nDemandAnalysis -> Manual\n";
    let (url, server) = stub(vec![completion(reply)]);
    let generator = Generator::Llm(LlmClient::new(config(&url, "DEVLOOP_STUB_KEY_GENERATE")));
    let spec = PromptSpec::new("Develop a tetris game.", PhaseVocabulary::builtin());
    let req = GenerationRequest {
        spec: &spec,
        constraint: None,
        temperature: 0.6,
        count: 2,
        stream: 0,
    };
    let out = generator.generate(&req, Parallelism::Sequential).unwrap();
    assert_eq!(
        out,
        vec![
            Instance::from_names(["DemandAnalysis", "Coding", "Manual"]).unwrap(),
            Instance::from_names(["Coding", "CodeComplete"]).unwrap(),
        ]
    );
    let seen = server.join().unwrap();
    let (headers, body) = &seen[0];
    assert!(headers
        .to_ascii_lowercase()
        .contains("authorization: bearer test-key"));
    let body: Value = serde_json::from_str(body).unwrap();
    assert_eq!(body["model"], "stub-model");
    assert_eq!(body["temperature"], 0.6);
    assert_eq!(body["messages"][0]["role"], "user");
    assert!(body["messages"][0]["content"]
        .as_str()
        .unwrap()
        .contains("Develop a tetris game."));
}

#[test]
fn server_errors_are_retried_then_reported() {
    let (url, server) = stub(vec![(500, "{}".into()), (503, "{}".into())]);
    let client = LlmClient::new(LlmConfig {
        retries: 1,
        ..config(&url, "DEVLOOP_STUB_KEY_RETRY")
    });
    assert_eq!(
        client.generate("p", 0.2),
        Err(GenerationError::HttpError(503))
    );
    assert_eq!(server.join().unwrap().len(), 2);
}

#[test]
fn client_errors_and_bad_bodies_are_not_retried() {
    let (url, server) = stub(vec![
        (401, "{}".into()),
        (200, "not json".into()),
        completion("no arrows here"),
    ]);
    let client = LlmClient::new(LlmConfig {
        retries: 3,
        ..config(&url, "DEVLOOP_STUB_KEY_CLIENT")
    });
    assert_eq!(
        client.generate("p", 0.2),
        Err(GenerationError::HttpError(401))
    );
    assert!(matches!(
        client.generate("p", 0.2),
        Err(GenerationError::InvalidResponse(_))
    ));
    assert_eq!(
        client.generate("p", 0.2),
        Err(GenerationError::EmptyGeneration)
    );
    assert_eq!(server.join().unwrap().len(), 3);
}

#[test]
fn chat_chain_executor_talks_to_the_endpoint() {
    // One phase: an instructor turn and a terminal assistant turn.
    let (url, server) = stub(vec![
        completion("Please summarise."),
        completion("<SOLUTION>done</SOLUTION>"),
    ]);
    let cfg = RunConfig {
        environment: EnvironmentConfig::ChatChain(ChatChainEnvironment {
            chain: ChatChainConfig {
                compile_cmd: vec!["true".into()],
                ..ChatChainConfig::default()
            },
            llm: config(&url, "DEVLOOP_STUB_KEY_CHAIN"),
        }),
        ..RunConfig::default()
    };
    let executor = Executor::from_config(&cfg, &PhaseVocabulary::builtin()).unwrap();
    assert_eq!(executor.mode_name(), "chat_chain");
    let inst = Instance::from_names(["DemandAnalysis"]).unwrap();
    let r = executor
        .execute(&inst, "Develop a tetris game.", 0)
        .unwrap();
    assert!(r.success, "{}", r.notes);
    assert_eq!(r.per_phase[0].turns.len(), 2);
    let seen = server.join().unwrap();
    let roles: Vec<Value> = seen
        .iter()
        .map(|(_, b)| serde_json::from_str::<Value>(b).unwrap()["messages"][0]["role"].clone())
        .collect();
    assert_eq!(roles, vec![json!("system"), json!("system")]);
}
