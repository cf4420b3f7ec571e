@Abstract(name="_ABSTRACT_1", val="List, ArrayList, LinkedList, Collection, Set, HashSet, TreeSet, Vector")
public void pattern() {
  _ABSTRACT_1 $v1;
  for (_WILDCARD_1 $v2 : $v1) {
    $v1.remove($v2);
  }
}
