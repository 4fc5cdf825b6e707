#ifndef LANDUSE_SYNTH_HPP
#define LANDUSE_SYNTH_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "landuse/dataset.hpp"
#include "landuse/geodata.hpp"

namespace landuse::synth {

/// Gaussian class blobs, one mean per class and stream.
struct BlobSpec {
  int classes = 10;
  int dim = 16;
  double separation = 3.0;  // norm of every class mean
  double noise_sd = 1.0;
  /// When true, stream k cannot tell apart the classes it pairs up (k = 0 pairs
  /// {0,1},{2,3},..., k = 1 pairs {1,2},{3,4},...), so streams are complementary.
  bool complementary = false;
  std::vector<std::string> streams{"object", "scene"};
  double domain_shift = 0.0;  // norm of a constant offset added to domain-B features
  std::uint64_t seed = 0;
};

class BlobWorld {
 public:
  explicit BlobWorld(BlobSpec spec);

  const BlobSpec& spec() const { return spec_; }
  /// Draws one feature vector per stream for a record of class `cls`.
  std::map<std::string, Eigen::VectorXd> draw(int cls, Domain domain, std::mt19937_64& rng) const;

  /**
   * `per_class` records of every class, domains alternating A/B. With
   * probability `flip_rate` a label is replaced by a uniformly chosen other
   * class. Class k is stored as fine index `class_offset + k`.
   */
  Dataset sample(int per_class, double flip_rate, std::uint64_t seed, const std::string& id_prefix,
                 int class_offset = 0) const;

 private:
  BlobSpec spec_;
  std::map<std::string, Eigen::MatrixXd> means_;  // stream -> dim x classes
  std::map<std::string, Eigen::VectorXd> shift_;
};

/// Square parcels on a regular grid with random truth classes and scattered photos.
struct CitySpec {
  int rows = 6;
  int cols = 6;
  double cell_m = 60.0;
  double gap_m = 16.0;
  double origin_lon = -122.42;
  double origin_lat = 37.77;
  double truth_rate = 0.8;       // share of parcels carrying ground truth
  double mixed_use_rate = 0.25;  // share of parcels with a second truth class
  int images_per_parcel = 6;
  double geotag_sigma_m = 3.0;
  int stray_images = 12;         // photos far away from every parcel
  std::uint64_t seed = 0;
};

struct City {
  std::vector<Parcel> parcels;
  Dataset images;  // domain B, geotagged, labeled with their true class
};

/// Builds a city whose photos draw features from `world`. Truth classes are
/// fine indices `class_offset + k` for k < world classes.
City make_city(const CitySpec& spec, const BlobWorld& world, int class_offset = 0);

}  // namespace landuse::synth

#endif  // LANDUSE_SYNTH_HPP
