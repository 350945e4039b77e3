from .dataset import (
    CorpusStats,
    DatasetFormatError,
    SkipExample,
    TrainingExample,
    build_examples,
    corpus_stats,
    extract_example,
    iter_dataset,
    keyword_tag,
    load_dataset,
    save_dataset,
)
from .lemmatizer import lemmatize
from .tagger import (
    EmptyInputError,
    PerceptronTagger,
    TaggedSentence,
    accuracy,
    read_tagged_corpus,
    tag_sentence,
    train_perceptron_tagger,
    write_tagged_corpus,
)
from .tags import CONTENT_UNIVERSAL, FINE_TO_UNIVERSAL, PENN_TAGS, UNIVERSAL_TAGS, TagVocabulary, UnknownTagError
from .toy import LexiconTagger, ToyGrammar
from .vocab import BOS, EOS, PAD, UNK, WordVocabulary

__all__ = [name for name in dir() if not name.startswith("_")]
