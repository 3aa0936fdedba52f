//! Orthonormal scaling-filter coefficients.
//!
//! Both filters are stored lowpass-only; the highpass is derived by the
//! conjugate quadrature mirror rule at construction. The values satisfy
//! double-shift orthonormality to machine precision, so the resulting
//! filterbank is exactly orthogonal; a unit test asserts the invariants
//! rather than trusting the transcription.

/// Symlet of order 8 (least-asymmetric Daubechies, 16 taps).
pub(crate) const SYM8_LO: [f64; 16] = [
    -0.0033824159509502952,
    -0.0005421323318622558,
    0.03169508781154437,
    0.0076074873250861295,
    -0.14329423835128127,
    -0.0612733590677476,
    0.4813596512590531,
    0.77718575169963,
    0.3644418948361755,
    -0.05194583810788234,
    -0.0272190299172119,
    0.04913717967371516,
    0.0038087520138444667,
    -0.014952258337009245,
    -0.00030292051476833823,
    0.0018899503327597638,
];

/// Discrete Meyer approximation, 62 taps. A finite-length rendering of the
/// Meyer conjugate mirror filter (which approximates ideal bandpassing),
/// refined so the orthonormality constraints hold exactly rather than only to
/// truncation accuracy.
pub(crate) const DMEY_LO: [f64; 62] = [
    -1.8683294957694165e-06,
    7.489243372575694e-06,
    -1.0163601411310407e-05,
    2.0405402317873126e-06,
    -2.18514485395779e-06,
    2.8074405052298918e-05,
    3.2858223226316395e-05,
    -2.9389617164963116e-05,
    1.7346563065071707e-06,
    -1.51904485047891e-05,
    2.2688468373320495e-05,
    4.440099061907123e-05,
    -6.118363621627016e-05,
    -0.00019788516046181971,
    -0.00011018900239544885,
    0.0007386776514622967,
    0.0005088382418339013,
    -0.002146067960112962,
    -0.001187116506336558,
    0.0055603925306958344,
    0.0014691778222297273,
    -0.012423410183955512,
    -0.00013805644753195538,
    0.024326313374405377,
    -0.005503449053041707,
    -0.04296350365702621,
    0.019593834697273063,
    0.0741122170738517,
    -0.05429388085739934,
    -0.141110739797984,
    0.18056298196423773,
    0.6602939583624042,
    0.6603180352482368,
    0.18053855149640458,
    -0.14108383373508854,
    -0.05432315734863592,
    0.07414814766389,
    0.019548850694629784,
    -0.042946421910416505,
    -0.005546105361050066,
    0.02425323500952885,
    -0.00011097655557806115,
    -0.012519958093909486,
    0.0015488133609759687,
    0.005626635743813881,
    -0.0011706170612228097,
    -0.002017089411261686,
    0.0004311950496626643,
    0.0005785030389733436,
    1.8247954837039514e-06,
    -0.0001674450943218555,
    -0.00011250756227832522,
    0.00010873625717918367,
    9.469361423395024e-05,
    -7.123542000672895e-05,
    4.101196013539268e-06,
    1.2927480909514924e-05,
    -2.3208042181127493e-05,
    -1.9163523132017986e-05,
    -2.539882194524672e-06,
    1.738245456150546e-06,
    4.3363729749581005e-07,
];
