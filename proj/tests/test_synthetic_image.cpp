#include <doctest.h>

#include <fstream>

#include "fssfda/dataset.hpp"
#include "fssfda/error.hpp"
#include "fssfda/image.hpp"
#include "fssfda/plot.hpp"
#include "fssfda/synthetic.hpp"
#include "helpers.hpp"

using namespace fssfda;

TEST_CASE("ppm round-trip") {
    testutil::TempDir tmp("ppm");
    Image img = testutil::solid_image(6, 10, 200, 31);
    img.pixels[0] = 255;
    save_ppm(tmp.path() / "x.ppm", img);
    Image back = load_image(tmp.path() / "x.ppm");
    CHECK(back.width == 6);
    CHECK(back.height == 6);
    CHECK(back.pixels == img.pixels);

    std::ofstream bad(tmp.path() / "bad.ppm");
    bad << "not an image";
    bad.close();
    CHECK_THROWS_AS(load_image(tmp.path() / "bad.ppm"), IngestionError);
    CHECK_THROWS_AS(load_image(tmp.path() / "missing.ppm"), IngestionError);
}

TEST_CASE("bilinear resize preserves constant images") {
    FloatImage f;
    f.width = 5;
    f.height = 5;
    f.rgb.assign(75, 0.25f);
    FloatImage r = resize_bilinear(f, 9, 3);
    CHECK(r.width == 9);
    CHECK(r.height == 3);
    for (float v : r.rgb) CHECK(v == doctest::Approx(0.25f));
}

TEST_CASE("synthetic generator writes a scannable two-domain tree") {
    testutil::TempDir tmp("synth");
    SyntheticConfig cfg = testutil::tiny_synthetic(3, 5, 12);
    generate_synthetic_dataset(tmp.path(), cfg);

    DomainDataset alpha = scan_image_folder(tmp.path(), "alpha");
    DomainDataset beta = scan_image_folder(tmp.path(), "beta");
    CHECK(alpha.num_classes() == 3);
    CHECK(alpha.size() == 15);
    CHECK(beta.size() == 15);
    CHECK(same_vocabulary(alpha, beta));

    Image img = load_image(alpha.examples[0].image_ref);
    CHECK(img.width == 12);
    CHECK(img.height == 12);
}

TEST_CASE("synthetic generator is deterministic") {
    testutil::TempDir a("synth_a");
    testutil::TempDir b("synth_b");
    SyntheticConfig cfg = testutil::tiny_synthetic(2, 3, 10);
    generate_synthetic_dataset(a.path(), cfg);
    generate_synthetic_dataset(b.path(), cfg);

    DomainDataset da = scan_image_folder(a.path(), "alpha");
    DomainDataset db = scan_image_folder(b.path(), "alpha");
    REQUIRE(da.size() == db.size());
    for (int i = 0; i < da.size(); ++i) {
        Image ia = load_image(da.examples[static_cast<std::size_t>(i)].image_ref);
        Image ib = load_image(db.examples[static_cast<std::size_t>(i)].image_ref);
        CHECK(ia.pixels == ib.pixels);
    }
}

TEST_CASE("png writer emits a valid signature and plots render") {
    testutil::TempDir tmp("png");
    Canvas canvas(40, 30);
    canvas.fill_rect(5, 5, 10, 10, 200, 0, 0);
    canvas.draw_text(2, 20, "A1.9", 0, 0, 0);
    write_png(tmp.path() / "c.png", canvas);

    std::ifstream in(tmp.path() / "c.png", std::ios::binary);
    unsigned char sig[8];
    in.read(reinterpret_cast<char*>(sig), 8);
    CHECK(sig[0] == 137);
    CHECK(sig[1] == 'P');
    CHECK(sig[2] == 'N');
    CHECK(sig[3] == 'G');

    plot_scatter(tmp.path() / "s.png", {{0.1, 0.5}, {0.9, 0.7}, {0.4, 0.2}}, "SND", "ACC");
    CHECK(std::filesystem::exists(tmp.path() / "s.png"));

    LabelDistribution d1{{0.5, 0.3, 0.2}};
    LabelDistribution d2{{0.2, 0.3, 0.5}};
    plot_label_distributions(tmp.path() / "dist.png", {{"alpha", d1}, {"beta", d2}});
    CHECK(std::filesystem::exists(tmp.path() / "dist.png"));
    CHECK(std::filesystem::file_size(tmp.path() / "dist.png") > 100);
}
