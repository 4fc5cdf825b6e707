#include "landuse/taxonomy.hpp"

#include <sstream>

#include "landuse/error.hpp"

namespace landuse {

std::string_view to_string(Level level) {
  switch (level) {
    case Level::Fine: return "fine";
    case Level::Middle: return "middle";
    case Level::Top: return "top";
  }
  return "fine";
}

Level parse_level(std::string_view text) {
  if (text == "fine" || text == "Fine" || text == "45") return Level::Fine;
  if (text == "middle" || text == "Middle" || text == "16") return Level::Middle;
  if (text == "top" || text == "Top" || text == "5") return Level::Top;
  throw ConfigError("unknown taxonomy level '" + std::string(text) + "'");
}

Taxonomy::Taxonomy(std::vector<std::string> top, std::vector<std::string> middle,
                   std::vector<std::string> fine, std::vector<ClassIndex> middle_to_top,
                   std::vector<ClassIndex> fine_to_middle)
    : names_{std::move(fine), std::move(middle), std::move(top)},
      middle_to_top_(std::move(middle_to_top)),
      fine_to_middle_(std::move(fine_to_middle)) {
  std::vector<std::string> issues;
  for (std::size_t l = 0; l < 3; ++l) {
    if (names_[l].empty()) issues.push_back(std::string(to_string(Level(l))) + " level is empty");
    for (std::size_t i = 0; i < names_[l].size(); ++i) {
      if (!lookup_[l].emplace(names_[l][i], static_cast<ClassIndex>(i)).second)
        issues.push_back("duplicate " + std::string(to_string(Level(l))) + " class '" + names_[l][i] + "'");
    }
  }
  auto check_map = [&](const std::vector<ClassIndex>& map, std::size_t from, std::size_t to, const char* what) {
    if (map.size() != names_[from].size()) {
      issues.push_back(std::string(what) + " map has wrong length");
      return;
    }
    for (std::size_t i = 0; i < map.size(); ++i)
      if (map[i] < 0 || static_cast<std::size_t>(map[i]) >= names_[to].size())
        issues.push_back(std::string(what) + " parent of '" + names_[from][i] + "' out of range");
  };
  check_map(fine_to_middle_, 0, 1, "fine-to-middle");
  check_map(middle_to_top_, 1, 2, "middle-to-top");
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

void Taxonomy::check(Level level, ClassIndex i) const {
  if (i < 0 || static_cast<std::size_t>(i) >= size(level))
    throw DomainError("class index " + std::to_string(i) + " out of range for level " +
                      std::string(to_string(level)) + " (size " + std::to_string(size(level)) + ")");
}

const std::string& Taxonomy::name(Level level, ClassIndex i) const {
  check(level, i);
  return names_[idx(level)][static_cast<std::size_t>(i)];
}

std::optional<ClassIndex> Taxonomy::find(Level level, std::string_view name) const {
  const auto& m = lookup_[idx(level)];
  auto it = m.find(std::string(name));
  if (it == m.end()) return std::nullopt;
  return it->second;
}

ClassIndex Taxonomy::index(Level level, std::string_view name) const {
  if (auto i = find(level, name)) return *i;
  throw DomainError("unknown " + std::string(to_string(level)) + " class '" + std::string(name) + "'");
}

ClassIndex Taxonomy::roll_up(ClassIndex fine_index, Level target) const {
  return roll_up(fine_index, Level::Fine, target);
}

ClassIndex Taxonomy::roll_up(ClassIndex index, Level from, Level target) const {
  check(from, index);
  if (!is_coarser_or_equal(target, from))
    throw DomainError("cannot roll " + std::string(to_string(from)) + " class down to level " +
                      std::string(to_string(target)));
  ClassIndex i = index;
  Level l = from;
  while (l != target) {
    if (l == Level::Fine) {
      i = fine_to_middle_[static_cast<std::size_t>(i)];
      l = Level::Middle;
    } else {
      i = middle_to_top_[static_cast<std::size_t>(i)];
      l = Level::Top;
    }
  }
  return i;
}

std::vector<ClassIndex> Taxonomy::relabel(std::span<const ClassIndex> fine_labels, Level target) const {
  std::vector<ClassIndex> out;
  out.reserve(fine_labels.size());
  for (ClassIndex i : fine_labels) out.push_back(roll_up(i, target));
  return out;
}

std::string Taxonomy::to_text() const {
  std::ostringstream os;
  for (std::size_t t = 0; t < size(Level::Top); ++t) {
    os << names_[2][t] << '\n';
    for (std::size_t m = 0; m < size(Level::Middle); ++m) {
      if (middle_to_top_[m] != static_cast<ClassIndex>(t)) continue;
      os << "  " << names_[1][m] << '\n';
      for (std::size_t f = 0; f < size(Level::Fine); ++f)
        if (fine_to_middle_[f] == static_cast<ClassIndex>(m)) os << "    " << names_[0][f] << '\n';
    }
  }
  return os.str();
}

Taxonomy Taxonomy::from_text(std::string_view text) {
  std::vector<std::string> top, middle, fine;
  std::vector<ClassIndex> m2t, f2m;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    const std::size_t line_start = pos;
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::size_t depth2 = 0;  // in half-levels: a space is 1, a tab is 2
    std::size_t k = 0;
    for (; k < line.size() && (line[k] == ' ' || line[k] == '\t'); ++k) depth2 += line[k] == '\t' ? 2 : 1;
    std::string_view body = line.substr(k);
    while (!body.empty() && (body.back() == ' ' || body.back() == '\t')) body.remove_suffix(1);
    if (body.empty() || body.front() == '#') continue;
    if (depth2 % 2 != 0 || depth2 > 4) throw ParseError("bad indentation in taxonomy file", line_start);

    switch (depth2 / 2) {
      case 0:
        top.emplace_back(body);
        break;
      case 1:
        if (top.empty()) throw ParseError("middle class before any top class", line_start);
        middle.emplace_back(body);
        m2t.push_back(static_cast<ClassIndex>(top.size() - 1));
        break;
      default:
        if (middle.empty()) throw ParseError("fine class before any middle class", line_start);
        fine.emplace_back(body);
        f2m.push_back(static_cast<ClassIndex>(middle.size() - 1));
        break;
    }
  }
  return Taxonomy(std::move(top), std::move(middle), std::move(fine), std::move(m2t), std::move(f2m));
}

bool Taxonomy::operator==(const Taxonomy& other) const {
  return names_ == other.names_ && middle_to_top_ == other.middle_to_top_ &&
         fine_to_middle_ == other.fine_to_middle_;
}

namespace {

constexpr std::string_view kBuiltin = R"(Residence or accommodation functions
  Hotels, motels, or other accommodation services
    lodging
General sales or services
  Retail sales or service
    bicycle_store
    car_service
    department_store
    home_goods_store
    book_store
    clothing_store
    jewelry_store
    shoe_store
    bakery
    pharmacy
    shopping_mall
  Finance and Insurance
    bank
  Business, professional, scientific, and technical services
    post_office
    travel_agency
    veterinary_care
  Food services
    restaurant
    coffee_house
    night_club
    bar
  Personal services
    hair_care
Transportation, communication, information, and utilities
  Transportation service
    bus_station
    subway_station
    train_station
    parking
  Communications and information
    library
Arts, entertainment and recreation
  Performing arts or supporting establishment
    art_gallery
    movie_theater
    stadium
  Museums and other special purpose recreational institutions
    aquarium
    museum
    zoo
  Amusement, sports, or recreation establishment
    park
    amusement_park
    gym
Education, public admin, health care and other institution
  Educational services
    school
    university
  Public administration
    city_hall
    courthouse
    local_government_office
  Public safety
    fire_station
    police_station
  Health and human services
    hospital
  Religious institutions
    church
    temple
)";

}  // namespace

const Taxonomy& builtin_taxonomy() {
  static const Taxonomy taxonomy = Taxonomy::from_text(kBuiltin);
  return taxonomy;
}

}  // namespace landuse
