use super::*;

fn m(r: usize, c: usize, data: &[f64]) -> Tensor {
    Tensor::new(vec![r, c], data.to_vec()).unwrap()
}

#[test]
fn softmax_single_element_is_one() {
    let mut g = Graph::new();
    let x = g.input(m(1, 1, &[-3.7]));
    let y = g.softmax_rows(x).unwrap();
    assert_eq!(g.value(y).data, vec![1.0]);
}

#[test]
fn mse_of_equal_inputs_has_zero_gradient() {
    let mut g = Graph::new();
    let x = g.input(m(2, 2, &[1.0, -2.0, 0.5, 3.0]));
    let l = g.mse(x, x).unwrap();
    assert_eq!(g.value(l).item(), 0.0);
    let gr = g.backward(l).unwrap();
    assert!(gr.get(x).unwrap().data.iter().all(|v| *v == 0.0));
}

#[test]
fn shape_errors_name_both_shapes() {
    let mut g = Graph::new();
    let a = g.input(m(2, 3, &[0.0; 6]));
    let b = g.input(m(2, 3, &[0.0; 6]));
    let msg = g.matmul(a, b).unwrap_err().to_string();
    assert!(msg.contains("[2, 3]") && msg.contains("matmul"), "{msg}");
    let c = g.input(m(3, 2, &[0.0; 6]));
    let msg = g.add(a, c).unwrap_err().to_string();
    assert!(msg.contains("[2, 3]") && msg.contains("[3, 2]"), "{msg}");
}

#[test]
fn constants_receive_no_gradient() {
    let mut g = Graph::new();
    let a = g.constant(m(1, 2, &[1.0, 2.0]));
    let b = g.input(m(1, 2, &[3.0, 4.0]));
    let p = g.mul(a, b).unwrap();
    let s = g.sum(p);
    let gr = g.backward(s).unwrap();
    assert!(gr.get(a).is_none());
    assert_eq!(gr.get(b).unwrap().data, vec![1.0, 2.0]);
}

#[test]
fn backward_needs_scalar() {
    let mut g = Graph::new();
    let a = g.input(m(1, 2, &[1.0, 2.0]));
    assert!(g.backward(a).is_err());
}
