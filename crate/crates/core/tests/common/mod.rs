#![allow(dead_code)]

use std::path::PathBuf;

use eventaug::EventOntology;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn ontology() -> EventOntology {
    eventaug::load_ontology(&fixture("ontology.toml")).expect("fixture ontology loads")
}

/// Serves `app` on an ephemeral local port from a background runtime and
/// returns the base URL.
pub fn serve(app: axum::Router) -> String {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    let addr = rx.recv().expect("server starts");
    format!("http://{addr}")
}
