#include "landuse/synth.hpp"

#include <cmath>

#include "landuse/error.hpp"

namespace landuse::synth {

namespace {

Eigen::VectorXd gaussian(int dim, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = n(rng);
  return v;
}

int mean_group(int stream_index, int cls, int classes, bool complementary) {
  if (!complementary) return cls;
  return stream_index % 2 == 0 ? cls / 2 : ((cls + 1) % classes) / 2;
}

}  // namespace

BlobWorld::BlobWorld(BlobSpec spec) : spec_(std::move(spec)) {
  if (spec_.classes < 2 || spec_.dim < 1 || spec_.streams.empty()) throw DomainError("degenerate blob spec");
  std::mt19937_64 rng(spec_.seed);
  for (std::size_t s = 0; s < spec_.streams.size(); ++s) {
    const int groups = spec_.complementary ? (spec_.classes + 1) / 2 : spec_.classes;
    Eigen::MatrixXd group_means(spec_.dim, groups);
    for (int g = 0; g < groups; ++g) {
      Eigen::VectorXd v = gaussian(spec_.dim, rng);
      group_means.col(g) = v.normalized() * spec_.separation;
    }
    Eigen::MatrixXd means(spec_.dim, spec_.classes);
    for (int k = 0; k < spec_.classes; ++k)
      means.col(k) = group_means.col(mean_group(static_cast<int>(s), k, spec_.classes, spec_.complementary));
    means_[spec_.streams[s]] = std::move(means);
    Eigen::VectorXd shift = gaussian(spec_.dim, rng);
    shift_[spec_.streams[s]] = shift.normalized() * spec_.domain_shift;
  }
}

std::map<std::string, Eigen::VectorXd> BlobWorld::draw(int cls, Domain domain, std::mt19937_64& rng) const {
  std::map<std::string, Eigen::VectorXd> out;
  for (const std::string& stream : spec_.streams) {
    Eigen::VectorXd x = means_.at(stream).col(cls) + gaussian(spec_.dim, rng, spec_.noise_sd);
    if (domain == Domain::B) x += shift_.at(stream);
    out.emplace(stream, std::move(x));
  }
  return out;
}

Dataset BlobWorld::sample(int per_class, double flip_rate, std::uint64_t seed, const std::string& id_prefix,
                          int class_offset) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> other(1, spec_.classes - 1);
  std::vector<ImageRecord> records;
  records.reserve(static_cast<std::size_t>(per_class) * static_cast<std::size_t>(spec_.classes));
  std::size_t n = 0;
  for (int i = 0; i < per_class; ++i)
    for (int k = 0; k < spec_.classes; ++k) {
      ImageRecord r;
      r.id = id_prefix + std::to_string(n);
      r.domain = n % 2 == 0 ? Domain::A : Domain::B;
      r.features = draw(k, r.domain, rng);
      int label = k;
      if (unit(rng) < flip_rate) label = (k + other(rng)) % spec_.classes;
      r.label = class_offset + label;
      records.push_back(std::move(r));
      ++n;
    }
  return Dataset(std::move(records));
}

City make_city(const CitySpec& spec, const BlobWorld& world, int class_offset) {
  if (spec.rows < 1 || spec.cols < 1 || spec.cell_m <= 0.0) throw DomainError("degenerate city spec");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, world.spec().classes - 1);
  std::normal_distribution<double> jitter(0.0, spec.geotag_sigma_m);

  const double m_per_deg_lat = kMetersPerDegree;
  const double m_per_deg_lon = kMetersPerDegree * std::cos(spec.origin_lat * M_PI / 180.0);
  auto to_geo = [&](double x, double y) {
    return GeoPoint{spec.origin_lon + x / m_per_deg_lon, spec.origin_lat + y / m_per_deg_lat};
  };
  const double pitch = spec.cell_m + spec.gap_m;

  City city;
  std::vector<ImageRecord> images;
  std::size_t n = 0;
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) {
      const double x0 = c * pitch, y0 = r * pitch;
      Ring ring{to_geo(x0, y0), to_geo(x0 + spec.cell_m, y0), to_geo(x0 + spec.cell_m, y0 + spec.cell_m),
                to_geo(x0, y0 + spec.cell_m), to_geo(x0, y0)};
      std::vector<int> classes{pick(rng)};
      if (unit(rng) < spec.mixed_use_rate) {
        int second = pick(rng);
        if (second != classes[0]) classes.push_back(second);
      }
      const bool truthed = unit(rng) < spec.truth_rate;
      std::vector<ClassIndex> truth;
      if (truthed)
        for (int k : classes) truth.push_back(class_offset + k);
      char id[32];
      std::snprintf(id, sizeof id, "r%02dc%02d", r, c);
      city.parcels.push_back(make_parcel(id, {std::move(ring)}, std::move(truth)));

      std::uniform_int_distribution<std::size_t> which(0, classes.size() - 1);
      for (int i = 0; i < spec.images_per_parcel; ++i) {
        ImageRecord rec;
        rec.id = "img" + std::to_string(n++);
        rec.domain = Domain::B;
        const int k = classes[which(rng)];
        const double x = x0 + unit(rng) * spec.cell_m + jitter(rng);
        const double y = y0 + unit(rng) * spec.cell_m + jitter(rng);
        rec.geo = to_geo(x, y);
        rec.label = class_offset + k;
        rec.features = world.draw(k, rec.domain, rng);
        images.push_back(std::move(rec));
      }
    }
  // strays: well outside the grid
  const double far = spec.rows * pitch + 500.0;
  for (int i = 0; i < spec.stray_images; ++i) {
    ImageRecord rec;
    rec.id = "img" + std::to_string(n++);
    rec.domain = Domain::B;
    const int k = pick(rng);
    rec.geo = to_geo(-far * unit(rng) - 200.0, -far * unit(rng) - 200.0);
    rec.label = class_offset + k;
    rec.features = world.draw(k, rec.domain, rng);
    images.push_back(std::move(rec));
  }
  city.images = Dataset(std::move(images));
  return city;
}

}  // namespace landuse::synth
