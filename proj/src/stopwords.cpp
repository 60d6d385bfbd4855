#include <set>
#include <sstream>
#include <string>
#include <string_view>

namespace cwatch {

namespace {

constexpr std::string_view kEnglish = R"(
a about above after again against ain all also am an and any are aren aren't as at be because been
before being below between both but by can can't cannot could couldn couldn't d did didn didn't do does
doesn doesn't doing don don't down during each few for from further had hadn hadn't has hasn hasn't have
haven haven't having he he'd he'll he's her here here's hers herself him himself his how how's i i'd i'll
i'm i've if in into is isn isn't it it's its itself just let's ll m ma me might mightn mightn't more most
must mustn mustn't my myself needn needn't no nor not now o of off on once only or other ought our ours
ourselves out over own re s same shan shan't she she'd she'll she's should should've shouldn shouldn't so
some such t than that that'll that's the their theirs them themselves then there there's these they
they'd they'll they're they've this those through to too under until up us ve very was wasn wasn't we
we'd we'll we're we've were weren weren't what what's when when's where where's which while who who's
whom why why's will with won won't would wouldn wouldn't y you you'd you'll you're you've your yours
yourself yourselves
)";

constexpr std::string_view kFrench = R"(
ai aie aient aies ait as au aura aurai auraient aurais aurait auras aurez auriez aurions aurons auront
aux avaient avais avait avec avez aviez avions avons ayant ayez ayons c ce ceci cela celà ces cet cette
d dans de des du elle en es est et étaient étais était étant été étiez étions eu eue eues eûmes eurent
eus eusse eussent eusses eussiez eussions eut eût eûtes eux fûmes furent fus fusse fussent fusses
fussiez fussions fut fût fûtes ici il ils j je l la le les leur leurs lui m ma mais me même mes moi mon
n ne nos notre nous on ont ou où par pas pour qu que quel quelle quelles quels qui s sa sans se sera
serai seraient serais serait seras serez seriez serions serons seront ses si soi soient sois soit sommes
son sont soyez soyons suis sur t ta te tes toi ton tu un une vos votre vous y à ça
)";

std::set<std::string> words_of(std::string_view text) {
  std::set<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) {
    out.insert(w);
    // Typographic apostrophe variant.
    if (auto pos = w.find('\''); pos != std::string::npos) out.insert(w.substr(0, pos) + "’" + w.substr(pos + 1));
  }
  return out;
}

}  // namespace

std::set<std::string> builtin_stopwords(std::string_view id) {
  if (id == "en") return words_of(kEnglish);
  if (id == "fr") return words_of(kFrench);
  return {};
}

}  // namespace cwatch
