mod common;

use common::grads;

#[test]
fn encoder_gradients() {
    let r = grads::encoder(25, 1);
    assert!(r.ok(), "{r:?}");
}

#[test]
fn fusion_gradients() {
    let r = grads::fusion(25, 2);
    assert!(r.ok(), "{r:?}");
}

#[test]
fn attention_gradients() {
    let r = grads::attention(25, 3);
    assert!(r.ok(), "{r:?}");
}

#[test]
fn head_gradients_all_modes() {
    let r = grads::heads(30, 4);
    assert!(r.ok(), "{r:?}");
}

#[test]
fn score_view_gradients() {
    let r = grads::score_view(30, 5);
    assert!(r.ok(), "{r:?}");
}

#[test]
fn qa_loss_gradients() {
    let r = grads::loss(25, 6);
    assert!(r.ok(), "{r:?}");
}

