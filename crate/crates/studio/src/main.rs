use pattern_studio::{router, AppState};

#[tokio::main]
async fn main() {
    let addr = std::env::args().nth(1).unwrap_or_else(|| "127.0.0.1:8080".into());
    let listener = tokio::net::TcpListener::bind(&addr).await.expect("bind address");
    eprintln!("listening on http://{addr}");
    axum::serve(listener, router(AppState::default())).await.expect("server");
}
