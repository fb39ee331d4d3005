mod common;

use std::sync::{Arc, Barrier};

use narralive_catalog::{spawn, Client, ClientError, Store};
use narralive_core::bundle;

use common::bundle as make;

fn server() -> (tempfile::TempDir, narralive_catalog::Running) {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(Store::open(dir.path()).unwrap());
    let running = spawn(store, "127.0.0.1:0".parse().unwrap()).unwrap();
    (dir, running)
}

#[test]
fn protocol_round_trip() {
    let (_d, srv) = server();
    let c = Client::new(&srv.base_url());
    assert!(c.list().unwrap().is_empty());

    let v1 = make("museum", "Museum", 1);
    let entry = c.publish(&v1).unwrap();
    assert_eq!((entry.story_id.as_str(), entry.version), ("museum", 1));

    let list = c.list().unwrap();
    assert_eq!(list, vec![entry]);
    let m = c.manifest("museum").unwrap();
    assert_eq!(m, bundle::read_manifest(&v1).unwrap());
    let v = c.version("museum").unwrap();
    assert_eq!((v.version, v.content_hash), (1, m.content_hash.clone()));
    assert_eq!(c.bundle("museum", None).unwrap(), v1);
    assert_eq!(c.asset("museum", "img/hall.png").unwrap(), b"PNG hall image");

    let v2 = make("museum", "Museum", 2);
    c.publish(&v2).unwrap();
    assert_eq!(c.bundle("museum", Some(1)).unwrap(), v1);
    assert_eq!(c.bundle("museum", None).unwrap(), v2);
    assert!(bundle::needs_update(&m, &c.manifest("museum").unwrap()).unwrap().needed);
}

#[test]
fn error_statuses() {
    let (_d, srv) = server();
    let c = Client::new(&srv.base_url());
    c.publish(&make("museum", "Museum", 2)).unwrap();
    assert!(matches!(
        c.publish(&make("museum", "Museum", 2)),
        Err(ClientError::VersionConflict(_))
    ));
    assert!(matches!(c.publish(b"garbage"), Err(ClientError::InvalidBundle(_))));
    assert!(matches!(c.manifest("ghost"), Err(ClientError::NotFound(_))));
    assert!(matches!(c.bundle("museum", Some(7)), Err(ClientError::NotFound(_))));
    assert!(matches!(
        c.asset("museum", "img/none.png"),
        Err(ClientError::NotFound(_))
    ));
}

#[test]
fn raw_responses() {
    let (_d, srv) = server();
    let c = Client::new(&srv.base_url());
    c.publish(&make("museum", "Museum", 1)).unwrap();
    let agent = ureq::Agent::new_with_defaults();
    let mut r = agent
        .get(&format!(
            "{}/api/experiences/museum/assets/img/hall.png",
            srv.base_url()
        ))
        .call()
        .unwrap();
    assert_eq!(r.headers().get("content-type").unwrap(), "image/png");
    assert_eq!(r.body_mut().read_to_vec().unwrap(), b"PNG hall image");
    let r = agent
        .get(&format!("{}/api/experiences/museum/bundle", srv.base_url()))
        .call()
        .unwrap();
    assert_eq!(r.headers().get("content-type").unwrap(), "application/zip");
}

#[test]
fn concurrent_http_publishes() {
    let (_d, srv) = server();
    let base = srv.base_url();
    let n = 6;
    let barrier = Arc::new(Barrier::new(n));
    let handles: Vec<_> = (0..n)
        .map(|_| {
            let (base, b) = (base.clone(), Arc::clone(&barrier));
            std::thread::spawn(move || {
                let bytes = make("museum", "Museum", 1);
                let c = Client::new(&base);
                b.wait();
                c.publish(&bytes)
            })
        })
        .collect();
    let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(results.iter().filter(|r| r.is_ok()).count(), 1);
    assert_eq!(
        results
            .iter()
            .filter(|r| matches!(r, Err(ClientError::VersionConflict(_))))
            .count(),
        n - 1
    );
    srv.stop();
}
