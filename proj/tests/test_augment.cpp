#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "auginf/dataset.hpp"
#include "auginf/orbit.hpp"
#include "auginf/rng.hpp"
#include "auginf/transform.hpp"

using namespace auginf;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    fs::path p = fs::temp_directory_path() / "auginf-test-augment";
    fs::create_directories(p);
    return p;
}

std::vector<std::vector<double>> sorted_rows(std::vector<std::vector<double>> rows) {
    std::sort(rows.begin(), rows.end());
    return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// Transforms

TEST_CASE("identity transform returns the input unchanged") {
    std::vector<double> x{1.5, -2.0, 0.25};
    CHECK(Transform::identity().apply(x) == x);
}

TEST_CASE("cyclic shift rotates coordinates and wraps") {
    std::vector<double> x{1, 2, 3, 4};
    CHECK(Transform::cyclic_shift_by(0).apply(x) == std::vector<double>{1, 2, 3, 4});
    CHECK(Transform::cyclic_shift_by(1).apply(x) == std::vector<double>{2, 3, 4, 1});
    CHECK(Transform::cyclic_shift_by(3).apply(x) == std::vector<double>{4, 1, 2, 3});
    CHECK(Transform::cyclic_shift_by(4).apply(x) == x);
    CHECK(Transform::cyclic_shift_by(5).apply(x) == Transform::cyclic_shift_by(1).apply(x));
    CHECK(Transform::cyclic_shift_by(-1).apply(x) == Transform::cyclic_shift_by(3).apply(x));
}

TEST_CASE("planar rotation moves each point pair") {
    const double pi = 3.14159265358979323846;
    std::vector<double> x{1.0, 0.0, 0.0, 2.0};
    auto y = Transform::rotation(pi / 2).apply(x);
    CHECK(y[0] == Catch::Approx(0.0).margin(1e-15));
    CHECK(y[1] == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(y[2] == Catch::Approx(-2.0).epsilon(1e-14));
    CHECK(y[3] == Catch::Approx(0.0).margin(1e-15));

    // Rotations compose additively.
    auto once = Transform::rotation(0.7).apply(Transform::rotation(0.4).apply(x));
    auto combined = Transform::rotation(1.1).apply(x);
    for (int j = 0; j < 4; ++j) CHECK(once[j] == Catch::Approx(combined[j]).margin(1e-12));

    std::vector<double> odd{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(Transform::rotation(0.1).apply(odd), ContractError);
}

TEST_CASE("sign flip negates one axis") {
    std::vector<double> x{1, 2, 3};
    CHECK(Transform::sign_flip_axis(1).apply(x) == std::vector<double>{1, -2, 3});
    // Involution.
    CHECK(Transform::sign_flip_axis(1).apply(Transform::sign_flip_axis(1).apply(x)) == x);
    CHECK_THROWS_AS(Transform::sign_flip_axis(5).apply(x), ContractError);
}

TEST_CASE("additive jitter shifts by its offset") {
    std::vector<double> x{1, 2};
    CHECK(Transform::jitter({0.5, -0.25}).apply(x) == std::vector<double>{1.5, 1.75});
    CHECK_THROWS_AS(Transform::jitter({0.5}).apply(x), ContractError);
}

// ---------------------------------------------------------------------------
// Orbits

TEST_CASE("identity orbit enumerates to the input itself") {
    Orbit o = Orbit::identity();
    std::vector<double> x{3.0, -1.0};
    auto en = enumerate_orbit(o, x);
    REQUIRE(en.size() == 1);
    CHECK(en[0] == x);

    RngStream rng(1);
    for (int i = 0; i < 20; ++i) CHECK(sample_augmentation(o, x, rng) == x);
}

TEST_CASE("cyclic group orbit enumerates all rotations in declaration order") {
    Orbit o = Orbit::cyclic_group(4);
    REQUIRE(o.size() == 4);
    CHECK(o.declared_group);
    std::vector<double> x{1, 2, 3, 4};
    auto en = enumerate_orbit(o, x);
    REQUIRE(en.size() == 4);
    CHECK(en[0] == std::vector<double>{1, 2, 3, 4});
    CHECK(en[1] == std::vector<double>{2, 3, 4, 1});
    CHECK(en[2] == std::vector<double>{3, 4, 1, 2});
    CHECK(en[3] == std::vector<double>{4, 1, 2, 3});
}

TEST_CASE("group orbits are closed: the orbit of a transformed input is a permutation") {
    std::vector<double> x{0.5, -1.0, 2.0, 0.0};

    for (const Orbit& o : {Orbit::cyclic_group(4), Orbit::sign_flip_group(2)}) {
        auto base = sorted_rows(enumerate_orbit(o, x));
        for (const Transform& a : o.transforms) {
            auto moved = sorted_rows(enumerate_orbit(o, a.apply(x)));
            CHECK(moved == base);
        }
        // Identity membership: some element maps x to itself.
        auto en = enumerate_orbit(o, x);
        CHECK(std::find(en.begin(), en.end(), x) != en.end());
    }
}

TEST_CASE("finite-orbit samples stay on the orbit with uniform frequency") {
    Orbit o = Orbit::cyclic_group(8);
    std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8};
    auto en = enumerate_orbit(o, x);
    RngStream rng(99);
    const int n = 100000;
    std::vector<int> counts(en.size(), 0);
    for (int i = 0; i < n; ++i) {
        auto v = sample_augmentation(o, x, rng);
        auto it = std::find(en.begin(), en.end(), v);
        REQUIRE(it != en.end());
        ++counts[static_cast<std::size_t>(it - en.begin())];
    }
    double expected = static_cast<double>(n) / 8.0;
    double se = std::sqrt(expected * (1.0 - 1.0 / 8.0));
    for (int c : counts) CHECK(std::abs(c - expected) <= 3.0 * se);
}

TEST_CASE("stochastic orbits reject finite-only operations") {
    StochasticFamily fam;
    fam.kind = StochasticFamily::Kind::rotation_uniform;
    Orbit o = Orbit::stochastic(fam);
    std::vector<double> x{1.0, 0.0};
    CHECK_THROWS_AS(enumerate_orbit(o, x), ModeError);
    CHECK_THROWS_AS(o.size(), ModeError);

    // Sampling is reproducible given the stream.
    RngStream a(5), b(5);
    CHECK(sample_augmentation(o, x, a) == sample_augmentation(o, x, b));
}

TEST_CASE("stochastic families validate their parameters") {
    StochasticFamily jit;
    jit.kind = StochasticFamily::Kind::jitter_gaussian;
    jit.scale = 0.1;
    RngStream rng(4);
    CHECK_THROWS_AS(jit.draw(rng), ContractError);  // dim not set
    jit.dim = 3;
    Transform t = jit.draw(rng);
    CHECK(t.offset.size() == 3);

    StochasticFamily shift;
    shift.kind = StochasticFamily::Kind::cyclic_shift_uniform;
    shift.dim = 6;
    for (int i = 0; i < 50; ++i) {
        Transform s = shift.draw(rng);
        CHECK(s.shift >= 0);
        CHECK(s.shift < 6);
    }
}

TEST_CASE("freeze_orbit pins K draws into a finite orbit deterministically") {
    StochasticFamily fam;
    fam.kind = StochasticFamily::Kind::rotation_uniform;
    Orbit stoch = Orbit::stochastic(fam);

    RngStream a(17), b(17), c(18);
    Orbit f1 = freeze_orbit(stoch, 4, a);
    Orbit f2 = freeze_orbit(stoch, 4, b);
    Orbit f3 = freeze_orbit(stoch, 4, c);
    REQUIRE(f1.is_finite());
    REQUIRE(f1.size() == 4);

    std::vector<double> probe{1.0, 0.0};
    auto e1 = enumerate_orbit(f1, probe);
    auto e2 = enumerate_orbit(f2, probe);
    auto e3 = enumerate_orbit(f3, probe);
    CHECK(e1 == e2);
    CHECK(e1 != e3);

    RngStream r(1);
    CHECK_THROWS_AS(freeze_orbit(stoch, 0, r), ContractError);
}

TEST_CASE("orbit row stacking matches enumeration and sampling") {
    Orbit o = Orbit::cyclic_group(3);
    std::vector<double> x{1, 2, 3};
    Tensor exact = orbit_rows_exact(o, x);
    REQUIRE(exact.rows() == 3);
    auto en = enumerate_orbit(o, x);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(exact(i, j) == en[i][j]);

    RngStream r1(8), r2(8);
    Tensor sampled = orbit_rows_sampled(o, x, 5, r1);
    REQUIRE(sampled.rows() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        std::vector<double> row(sampled.row(i).begin(), sampled.row(i).end());
        CHECK(row == sample_augmentation(o, x, r2));
    }
}

// ---------------------------------------------------------------------------
// Synthetic generators

TEST_CASE("shift_digits true labels are invariant to every cyclic shift") {
    SyntheticSpec spec;
    spec.generator = "shift_digits";
    spec.dim = 8;
    spec.classes = 3;
    spec.seed = 21;
    SyntheticData data = generate_synthetic(spec);
    data.train.validate();
    data.test.validate();
    CHECK(data.train.meta.invariance_group == "cyclic_shift");

    Orbit group = Orbit::cyclic_group(spec.dim);
    for (std::size_t i = 0; i < data.train.size(); ++i) {
        auto x = data.train.inputs.row(i);
        int base = true_label_shift_digits(x, spec.classes);
        for (const Transform& a : group.transforms)
            CHECK(true_label_shift_digits(a.apply(x), spec.classes) == base);
    }
}

TEST_CASE("rotated_blobs true labels are invariant to rotation") {
    SyntheticSpec spec;
    spec.generator = "rotated_blobs";
    spec.dim = 6;
    spec.classes = 3;
    spec.seed = 4;
    SyntheticData data = generate_synthetic(spec);
    CHECK(data.train.meta.invariance_group == "rotation_2d");

    for (std::size_t i = 0; i < data.train.size(); ++i) {
        auto x = data.train.inputs.row(i);
        int base = true_label_rotated_blobs(x, spec.classes);
        for (double angle : {0.3, 1.7, 4.4}) {
            auto moved = Transform::rotation(angle).apply(x);
            CHECK(true_label_rotated_blobs(moved, spec.classes) == base);
        }
    }
}

TEST_CASE("generators are deterministic given the seed") {
    SyntheticSpec spec;
    spec.generator = "shift_digits";
    spec.seed = 11;
    SyntheticData a = generate_synthetic(spec);
    SyntheticData b = generate_synthetic(spec);
    CHECK(a.train.inputs.data == b.train.inputs.data);
    CHECK(a.train.labels == b.train.labels);
    CHECK(a.test.inputs.data == b.test.inputs.data);

    spec.seed = 12;
    SyntheticData c = generate_synthetic(spec);
    CHECK(a.train.inputs.data != c.train.inputs.data);

    // Train and test splits do not share draws.
    CHECK(a.train.inputs.data != a.test.inputs.data);
}

TEST_CASE("class priors are uniform within sampling error") {
    SyntheticSpec spec;
    spec.generator = "shift_digits";
    spec.n_train = 3000;
    spec.n_test = 1;
    spec.dim = 8;
    spec.classes = 4;
    spec.seed = 31;
    SyntheticData data = generate_synthetic(spec);
    std::vector<int> counts(spec.classes, 0);
    for (int y : data.train.labels) ++counts[static_cast<std::size_t>(y)];
    double expected = static_cast<double>(spec.n_train) / spec.classes;
    double se = std::sqrt(expected * (1.0 - 1.0 / spec.classes));
    for (int c : counts) CHECK(std::abs(c - expected) <= 3.0 * se);
}

TEST_CASE("label noise flips the requested fraction of labels") {
    SyntheticSpec clean;
    clean.generator = "shift_digits";
    clean.n_train = 2000;
    clean.seed = 77;
    SyntheticSpec noisy = clean;
    noisy.label_noise = 0.25;

    Dataset a = generate_synthetic(clean).train;
    Dataset b = generate_synthetic(noisy).train;
    REQUIRE(a.size() == b.size());
    int flips = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.labels[i] != b.labels[i]) ++flips;
    double expected = 0.25 * static_cast<double>(a.size());
    double se = std::sqrt(expected * 0.75);
    CHECK(std::abs(flips - expected) <= 4.0 * se);
}

TEST_CASE("gaussian_location draws scalars around the location parameter") {
    SyntheticSpec spec;
    spec.generator = "gaussian_location";
    spec.n_train = 20000;
    spec.n_test = 10;
    spec.location = 2.5;
    spec.seed = 3;
    Dataset d = generate_synthetic(spec).train;
    CHECK(d.dim() == 1);
    CHECK(d.classes == 2);
    double mean = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) mean += d.inputs(i, 0);
    mean /= static_cast<double>(d.size());
    CHECK(std::abs(mean - 2.5) < 4.0 / std::sqrt(static_cast<double>(d.size())));
}

TEST_CASE("generator errors") {
    SyntheticSpec spec;
    spec.generator = "no_such_generator";
    CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);

    SyntheticSpec tight;
    tight.generator = "shift_digits";
    tight.dim = 3;
    tight.classes = 3;  // needs dim >= classes + 1
    CHECK_THROWS_AS(generate_synthetic(tight), ConfigError);

    SyntheticSpec odd;
    odd.generator = "rotated_blobs";
    odd.dim = 5;
    CHECK_THROWS_AS(generate_synthetic(odd), ConfigError);
}

// ---------------------------------------------------------------------------
// CSV format

TEST_CASE("csv round trip preserves the dataset exactly") {
    SyntheticSpec spec;
    spec.generator = "shift_digits";
    spec.n_train = 40;
    spec.n_test = 5;
    spec.seed = 13;
    Dataset ds = generate_synthetic(spec).train;

    fs::path path = temp_dir() / "roundtrip.csv";
    write_dataset_csv(path.string(), ds);
    Dataset back = load_dataset_csv(path.string());
    CHECK(back.inputs.data == ds.inputs.data);
    CHECK(back.labels == ds.labels);
    CHECK(back.dim() == ds.dim());
}

TEST_CASE("csv fixture parses with exact floats") {
    fs::path path = temp_dir() / "fixture.csv";
    {
        std::ofstream out(path);
        out << "label,f0,f1\n";
        out << "0,1.5,-2.25e-3\n";
        out << "1,0.1,3\n";
    }
    Dataset ds = load_dataset_csv(path.string());
    REQUIRE(ds.size() == 2);
    CHECK(ds.dim() == 2);
    CHECK(ds.classes == 2);
    CHECK(ds.inputs(0, 0) == 1.5);
    CHECK(ds.inputs(0, 1) == -2.25e-3);
    CHECK(ds.inputs(1, 1) == 3.0);
    CHECK(ds.labels == std::vector<int>{0, 1});
}

TEST_CASE("csv ingestion errors carry the offending line number") {
    fs::path dir = temp_dir();

    {
        std::ofstream out(dir / "badlabel.csv");
        out << "label,f0\n0,1.0\n2,2.0\n";
    }
    try {
        load_dataset_csv((dir / "badlabel.csv").string(), 2);  // labels must be < 2
        FAIL("expected IngestError");
    } catch (const IngestError& e) {
        CHECK(e.line() == 3);
    }

    {
        std::ofstream out(dir / "shortrow.csv");
        out << "label,f0,f1\n0,1.0,2.0\n1,3.0\n";
    }
    try {
        load_dataset_csv((dir / "shortrow.csv").string());
        FAIL("expected IngestError");
    } catch (const IngestError& e) {
        CHECK(e.line() == 3);
    }

    {
        std::ofstream out(dir / "badfloat.csv");
        out << "label,f0\n0,zap\n";
    }
    CHECK_THROWS_AS(load_dataset_csv((dir / "badfloat.csv").string()), IngestError);

    {
        std::ofstream out(dir / "badheader.csv");
        out << "f0,label\n0,1.0\n";
    }
    CHECK_THROWS_AS(load_dataset_csv((dir / "badheader.csv").string()), IngestError);

    CHECK_THROWS_AS(load_dataset_csv((dir / "missing.csv").string()), IngestError);
}

// ---------------------------------------------------------------------------
// IDX format

TEST_CASE("idx round trip preserves byte-quantized values") {
    Dataset ds;
    ds.classes = 3;
    ds.inputs = Tensor::zeros({4, 6});
    ds.labels = {0, 1, 2, 1};
    for (std::size_t i = 0; i < ds.inputs.data.size(); ++i)
        ds.inputs.data[i] = static_cast<double>((i * 37) % 256) / 255.0;

    fs::path images = temp_dir() / "tiny-images";
    write_dataset_idx(images.string(), ds);
    Dataset back = load_dataset_idx(images.string());
    CHECK(back.inputs.data == ds.inputs.data);
    CHECK(back.labels == ds.labels);
    CHECK(back.classes == 3);

    // The generic loader dispatches on format name.
    Dataset again = load_dataset(images.string(), "idx");
    CHECK(again.inputs.data == ds.inputs.data);
    CHECK_THROWS_AS(load_dataset(images.string(), "parquet"), ConfigError);
}

TEST_CASE("idx ingestion validates paths and magic numbers") {
    CHECK_THROWS_AS(load_dataset_idx((temp_dir() / "noimages").string()), IngestError);

    fs::path images = temp_dir() / "corrupt-images";
    fs::path labels = temp_dir() / "corrupt-labels";
    {
        std::ofstream out(images, std::ios::binary);
        const unsigned char bad[] = {0xde, 0xad, 0xbe, 0xef};
        out.write(reinterpret_cast<const char*>(bad), 4);
        std::ofstream lout(labels, std::ios::binary);
        lout << "x";
    }
    CHECK_THROWS_AS(load_dataset_idx(images.string()), IngestError);
}
